"""Moment/cumulant transforms over the partition lattices, and mixed cumulants.

The classical transform sums over all set partitions, the free transform over
non-crossing partitions only; both directions use the same recursion that
splits off the one-block term:

    m_n = kappa_n + sum over partitions with at least two blocks of
          prod_B kappa_{|B|}

so cumulants are obtained by subtracting the proper-partition sum from m_n.
Everything here is exact when fed exact rationals.  The lattice sums enumerate
partitions explicitly (capped by ``partitions.DEFAULT_CAPS``); for high orders
use the generating-function route in :mod:`freeprob.series` instead.

Multivariate mixed cumulants extend the same recursion to words: the moment of
a word is the sum over lattice partitions of products of cumulants of the
subwords cut out by the blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

from .partitions import enumerate_partitions

__all__ = [
    "MomentFunctional",
    "moments_to_cumulants",
    "cumulants_to_moments",
    "mixed_cumulant",
    "classical_convolve_moments",
]

LATTICES = ("classical", "free")


@lru_cache(maxsize=None)
def _block_profiles(n: int, lattice: str) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All partitions of {1..n} in the lattice, as tuples of index blocks."""
    family = "all" if lattice == "classical" else "non-crossing"
    return tuple(p.blocks for p in enumerate_partitions(n, family))


def _check_lattice(lattice: str):
    if lattice not in LATTICES:
        raise ValueError(f"lattice must be one of {LATTICES}, got {lattice!r}")


def moments_to_cumulants(moments, lattice: str = "classical") -> list:
    """Cumulants c_1..c_N (classical) or kappa_1..kappa_N (free) from moments.

    >>> moments_to_cumulants([0, 1, 0, 3, 0, 15], "classical")
    [Fraction(0, 1), Fraction(1, 1), Fraction(0, 1), Fraction(0, 1), Fraction(0, 1), Fraction(0, 1)]
    """
    _check_lattice(lattice)
    moments = [Fraction(x) if isinstance(x, int) else x for x in moments]
    kappa: list = []
    for n in range(1, len(moments) + 1):
        proper = 0
        for blocks in _block_profiles(n, lattice):
            if len(blocks) < 2:
                continue
            term = 1
            for b in blocks:
                term *= kappa[len(b) - 1]
                if term == 0:
                    break
            proper += term
        kappa.append(moments[n - 1] - proper)
    return kappa


def cumulants_to_moments(cumulants, lattice: str = "classical") -> list:
    """Moments from cumulants: m_n = sum over lattice partitions of prod kappa_|B|."""
    _check_lattice(lattice)
    cumulants = [Fraction(x) if isinstance(x, int) else x for x in cumulants]
    out: list = []
    for n in range(1, len(cumulants) + 1):
        total = 0
        for blocks in _block_profiles(n, lattice):
            term = 1
            for b in blocks:
                term *= cumulants[len(b) - 1]
                if term == 0:
                    break
            total += term
        out.append(total if total != 0 else Fraction(0))
    return out


@dataclass
class MomentFunctional:
    """Mixed moments tau[X_{w1} ... X_{wn}] indexed by words over an alphabet.

    ``table`` maps tuples of variable identifiers to values and must be total
    up to ``degree_cap``; the empty word maps to 1 (tau is unital).  Words are
    stored literally: no commutativity is assumed, so ('X','Y','X','Y') and
    ('X','X','Y','Y') are distinct entries.
    """

    alphabet: tuple
    table: dict
    degree_cap: int
    _kappa_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        self.table = {tuple(k): v for k, v in self.table.items()}
        self.table[()] = Fraction(1)

    def moment(self, word) -> Fraction:
        word = tuple(word)
        if len(word) > self.degree_cap:
            raise ValueError(
                f"word {word!r} exceeds the functional's degree cap {self.degree_cap}"
            )
        return self.table[word]

    @classmethod
    def from_classical_independent(cls, marginals: dict, degree_cap: int) -> "MomentFunctional":
        """Functional of commuting, classically independent variables.

        ``marginals[v]`` lists the raw moments m_1..m_k of variable v; a word's
        moment factorizes as the product of per-variable moments by count.
        """
        from itertools import product

        names = tuple(marginals)
        table = {}
        for deg in range(1, degree_cap + 1):
            for word in product(names, repeat=deg):
                val = Fraction(1)
                for v in names:
                    c = word.count(v)
                    if c:
                        val *= Fraction(marginals[v][c - 1])
                table[word] = val
        return cls(names, table, degree_cap)


def mixed_cumulant(f: MomentFunctional, word, lattice: str = "free"):
    """The multilinear cumulant of the word under f, over the chosen lattice.

    Defined by the recursive extension of the moment-cumulant formula:
    tau[word] = sum over lattice partitions pi of prod over blocks B of
    kappa(word restricted to B), solved for the one-block term.
    """
    _check_lattice(lattice)
    word = tuple(word)
    key = (word, lattice)
    cached = f._kappa_cache.get(key)
    if cached is not None:
        return cached
    n = len(word)
    if n == 0:
        raise ValueError("cumulant of the empty word is undefined")
    proper = 0
    for blocks in _block_profiles(n, lattice):
        if len(blocks) < 2:
            continue
        term = 1
        for b in blocks:
            term *= mixed_cumulant(f, tuple(word[i - 1] for i in b), lattice)
            if term == 0:
                break
        proper += term
    val = f.moment(word) - proper
    f._kappa_cache[key] = val
    return val


def classical_convolve_moments(mx, my) -> list:
    """Moments of the sum of classically independent variables.

    Converts both inputs to classical cumulants, adds, and converts back;
    this agrees term by term with the binomial formula
    m_n = sum_k C(n,k) m_k(X) m_{n-k}(Y).
    """
    if len(mx) != len(my):
        raise ValueError("moment sequences must have equal length")
    cx = moments_to_cumulants(mx, "classical")
    cy = moments_to_cumulants(my, "classical")
    return cumulants_to_moments([a + b for a, b in zip(cx, cy)], "classical")


def binomial_convolve_moments(mx, my) -> list:
    """Direct binomial-sum form of classical convolution (cross-check route)."""
    mx = [Fraction(1)] + list(mx)
    my = [Fraction(1)] + list(my)
    n_max = min(len(mx), len(my)) - 1
    return [
        sum(comb(n, k) * mx[k] * my[n - k] for k in range(n + 1))
        for n in range(1, n_max + 1)
    ]
