"""Random-matrix ensembles, exact trace-moment calculus, and MC experiments.

Sampling covers Ginibre, GUE, CUE (Gram-Schmidt of a Ginibre), and fixed
deterministic matrices.  The GUE normalization is defined by its pair
correlation E[X(ij) X(lk)] = delta_ik delta_jl / N — diagonal entries real
with variance 1/N, off-diagonal complex with per-component variance 1/(2N) —
since every exact formula below is derived from that covariance; note the
symmetrization (Z + Z*)/2 of a variance-1/N Ginibre produces HALF this
covariance and is therefore not used.

Exact calculus: `wick_trace_moment` expands E tr[X^n] over pairings as a
polynomial in 1/N^2 (the genus expansion), `genus_profile` histograms the
pairings by genus, and `weingarten_series` counts monotone transposition
factorizations to expand unitary correlators in 1/N, with exact geometric
resummation when the coefficient tail is periodic.

Monte Carlo: `mc_word_moment` estimates (E tr) of matrix words with
counter-based per-trial RNG streams, so results are bit-identical for any
worker count; `freeness_experiment` packages the standard asymptotic
freeness checks with exact predictions and z-scores.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .freeconv import free_convolve_moments
from .partitions import Permutation, is_geodesic

__all__ = [
    "EnsembleSpec",
    "WeingartenExpansion",
    "WeingartenValue",
    "MCEstimate",
    "FreenessRow",
    "FreenessReport",
    "sample",
    "wick_trace_moment",
    "genus_profile",
    "weingarten_series",
    "mc_word_moment",
    "freeness_experiment",
    "geodesic_order_assembly",
]

_KINDS = ("ginibre", "gue", "cue", "deterministic")


@dataclass(frozen=True)
class EnsembleSpec:
    """What to sample: ensemble kind, dimension, and RNG seed.

    deterministic specs carry their matrix in `payload`; the seed is then
    inert but kept so specs stay interchangeable in words.
    """

    kind: str
    N: int
    seed: int = 0
    payload: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; expected {_KINDS}")
        if self.N < 1:
            raise ValueError(f"dimension must be >= 1, got {self.N}")
        if self.kind == "deterministic":
            if self.payload is None:
                raise ValueError("deterministic spec needs a payload matrix")
            if getattr(self.payload, "shape", None) != (self.N, self.N):
                raise ValueError(
                    f"payload must be an ndarray of shape ({self.N}, {self.N})"
                )
        elif self.payload is not None:
            raise ValueError("payload only makes sense for deterministic specs")


def _rng(seed: int, trial: int = 0, stream: int = 0) -> np.random.Generator:
    """Counter-based stream: (seed, trial, stream) fully determine the draw."""
    key = np.array(
        [np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
         np.uint64(((trial << 8) | stream) & 0xFFFFFFFFFFFFFFFF)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def _haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Modified Gram-Schmidt of a complex Ginibre; columns normalized with
    positive real diagonal R, which is what makes the law Haar.  Columns
    that come out nearly dependent are re-orthogonalized once."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q = np.empty_like(a)
    for j in range(n):
        v = a[:, j].copy()
        norm0 = np.linalg.norm(v)
        for i in range(j):
            v -= (q[:, i].conj() @ v) * q[:, i]
        if np.linalg.norm(v) < 1e-8 * norm0:
            for i in range(j):
                v -= (q[:, i].conj() @ v) * q[:, i]
        q[:, j] = v / np.linalg.norm(v)
    return q


def _sample_rng(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.N
    if spec.kind == "deterministic":
        return spec.payload.astype(np.complex128)
    if spec.kind == "ginibre":
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return z / math.sqrt(2 * n)
    if spec.kind == "gue":
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return (a + a.conj().T) / (2.0 * math.sqrt(n))
    return _haar_unitary(rng, n)


def sample(spec: EnsembleSpec, trial: int = 0) -> np.ndarray:
    """One draw from the ensemble; trial selects an independent stream."""
    return _sample_rng(spec, _rng(spec.seed, trial))


def _iter_pairing_images(n: int):
    """Yield each pairing of {1..n} as a 0-based involution image array."""
    images = list(range(n))

    def rec(free: list):
        if not free:
            yield tuple(images)
            return
        a = free[0]
        rest = free[1:]
        for idx, b in enumerate(rest):
            images[a], images[b] = b, a
            yield from rec(rest[:idx] + rest[idx + 1 :])
            images[a], images[b] = a, b

    yield from rec(list(range(n)))


def _pairing_cycle_histogram(n: int) -> dict:
    """counts[c] = number of pairings pi of [n] with c cycles in gamma*pi,
    gamma the forward n-cycle."""
    counts: dict = {}
    for images in _iter_pairing_images(n):
        seen = [False] * n
        c = 0
        for start in range(n):
            if seen[start]:
                continue
            c += 1
            k = start
            while not seen[k]:
                seen[k] = True
                k = (images[k] + 1) % n
        counts[c] = counts.get(c, 0) + 1
    return counts


def wick_trace_moment(n: int, N=None):
    """E tr[X^n] for GUE, exactly, as a genus expansion.

    Returns {r: count} meaning sum_r count / N^r (r runs over even
    non-negative integers) when N is None, or the evaluated exact rational
    for integer N.  Odd n gives exactly zero: there is no pairing of an odd
    set.
    """
    if n < 0:
        raise ValueError(f"moment order must be >= 0, got {n}")
    if n > 20:
        raise ValueError(f"moment order {n} > 20: pairing enumeration grows as (n-1)!!")
    if n % 2 == 1:
        return {} if N is None else Fraction(0)
    if n == 0:
        return {0: 1} if N is None else Fraction(1)
    hist = _pairing_cycle_histogram(n)
    expansion = {n // 2 + 1 - c: cnt for c, cnt in sorted(hist.items(), reverse=True)}
    if N is None:
        return expansion
    return sum((Fraction(cnt, N**r) for r, cnt in expansion.items()), Fraction(0))


def genus_profile(k: int) -> tuple:
    """(eps_0(2k), eps_1(2k), ...): pairings of [2k] by genus g, where the
    cycle count of gamma*pi is k+1-2g.  eps_0 = Cat_k and the total is
    (2k-1)!!."""
    if not 1 <= k <= 8:
        raise ValueError(f"k must be in 1..8, got {k}")
    hist = _pairing_cycle_histogram(2 * k)
    return tuple(hist.get(k + 1 - 2 * g, 0) for g in range(k // 2 + 1))


@dataclass(frozen=True)
class WeingartenValue:
    value: object
    error_bound: float
    exact: bool


@dataclass(frozen=True)
class WeingartenExpansion:
    """Monotone-factorization counts c_{n,r}(pi) and their 1/N resummation.

    coefficients holds c at r = |pi|, |pi|+2, ..., <= R (the off-parity
    counts vanish identically); raw holds every r for the invariant checks.
    The correlator is (1/N^n) sum_r (-1)^r c_r / N^r.
    """

    n: int
    permutation: Permutation
    R: int
    raw: tuple = field(repr=False)
    coefficients: tuple = ()

    @property
    def leading(self) -> int:
        """a(pi) = (-1)^{|pi|} c_{n,|pi|}(pi): the order-N^{-(n+|pi|)} weight."""
        d = self.permutation.cayley_distance
        return (-1) ** d * self.raw[d]

    def _periodic_from(self) -> int | None:
        for r0 in range(0, self.R - 4):
            if all(self.raw[r + 2] == self.raw[r] for r in range(r0, self.R - 1)):
                return r0
        return None

    def evaluate(self, N: int) -> WeingartenValue:
        """Correlator value at dimension N: exact geometric resummation when
        the coefficient tail is periodic, else the truncated series with an
        extrapolated next-term error bound."""
        if N < self.n:
            raise ValueError(f"need N >= n = {self.n} for an invertible Gram matrix")
        r0 = self._periodic_from()
        if r0 is not None:
            head = sum(
                (Fraction((-1) ** r * self.raw[r], N ** (self.n + r))
                 for r in range(r0)),
                Fraction(0),
            )
            geom = Fraction(N * N, N * N - 1)
            tail = (
                Fraction((-1) ** r0 * self.raw[r0], N ** (self.n + r0))
                + Fraction((-1) ** (r0 + 1) * self.raw[r0 + 1], N ** (self.n + r0 + 1))
            ) * geom
            return WeingartenValue(head + tail, 0.0, True)
        total = sum(
            (Fraction((-1) ** r * self.raw[r], N ** (self.n + r))
             for r in range(self.R + 1)),
            Fraction(0),
        )
        last = next((r for r in range(self.R, -1, -1) if self.raw[r]), None)
        if last is None:
            return WeingartenValue(total, 0.0, True)
        # Geometric tail bound: coefficient ratios c_{r+2}/c_r approach
        # (n-1)^2 (the dominant pole of the rational resummation), so the
        # dropped remainder is at most a geometric series in q below.
        growth = (self.raw[last] / self.raw[last - 2]) if last >= 2 and self.raw[last - 2] else 1.0
        q = max(growth, float((self.n - 1) ** 2)) / N**2
        if q >= 1.0:
            return WeingartenValue(total, math.inf, False)
        bound = self.raw[last] / N ** (self.n + last) * q / (1.0 - q)
        return WeingartenValue(total, float(bound), False)


def weingarten_series(permutation: Permutation, R: int | None = None) -> WeingartenExpansion:
    """Count monotone factorizations of pi into r transpositions, r <= R.

    A monotone factorization is pi = (s_1 t_1)...(s_r t_r) with s_i < t_i
    and t_1 <= ... <= t_r.  Counted by stripping the last (largest-t)
    factor, memoized on (permutation, max allowed t).
    """
    n = permutation.n
    if n > 8:
        raise ValueError(f"permutation size {n} > 8")
    if R is None:
        R = permutation.cayley_distance + 10
    if R > 20:
        raise ValueError(f"truncation order {R} > 20")
    transpositions = [
        (Permutation.transposition(n, s, t), t)
        for t in range(2, n + 1)
        for s in range(1, t)
    ]
    ident_images = Permutation.identity(n).images
    cache: dict = {}

    # Count factorizations of exactly length r by stripping the last
    # (largest-t) factor; r decreases, so the recursion is well-founded.
    def counts(pi: Permutation, cap: int, r: int) -> int:
        if r == 0:
            return 1 if pi.images == ident_images else 0
        key = (pi.images, cap, r)
        got = cache.get(key)
        if got is None:
            got = sum(
                counts(pi * tau, t, r - 1) for tau, t in transpositions if t <= cap
            )
            cache[key] = got
        return got

    raw = tuple(counts(permutation, n, r) for r in range(R + 1))
    d = permutation.cayley_distance
    return WeingartenExpansion(
        n=n,
        permutation=permutation,
        R=R,
        raw=raw,
        coefficients=tuple(raw[r] for r in range(d, R + 1, 2)),
    )


@dataclass(frozen=True)
class MCEstimate:
    mean: complex
    stderr: float
    trials: int
    seed: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")


def _normalize_word(word) -> list[tuple[int, bool]]:
    out = []
    for item in word:
        if isinstance(item, (tuple, list)):
            idx, adj = item
            out.append((int(idx), bool(adj)))
        else:
            out.append((int(item), False))
    if not out:
        raise ValueError("word must be non-empty")
    return out


def mc_word_moment(specs, word, trials: int, workers: int = 1) -> MCEstimate:
    """Monte Carlo (E tr) of a matrix word, bit-reproducible across workers.

    word entries are spec indices or (index, adjoint) pairs.  Each trial
    samples every referenced spec from its own counter-based stream keyed by
    (spec seed, trial, spec position), so the estimate depends only on the
    specs, the word, and the trial count; per-trial values land in a
    trial-indexed array and are reduced with a single pairwise sum.
    """
    specs = list(specs)
    letters = _normalize_word(word)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    ns = {s.N for s in specs}
    if len(ns) != 1:
        raise ValueError(f"dimension mismatch across specs: {sorted(ns)}")
    (n,) = ns
    used = sorted({idx for idx, _ in letters})
    for idx in used:
        if not 0 <= idx < len(specs):
            raise ValueError(f"word references spec {idx}, have {len(specs)}")
    vals = np.empty(trials, dtype=np.complex128)

    def run(trial: int):
        mats = {i: _sample_rng(specs[i], _rng(specs[i].seed, trial, i)) for i in used}
        prod = None
        for idx, adj in letters:
            m = mats[idx].conj().T if adj else mats[idx]
            prod = m if prod is None else prod @ m
        vals[trial] = np.trace(prod) / n

    if workers <= 1:
        for t in range(trials):
            run(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(trials)))
    mean = complex(np.sum(vals) / trials)
    if trials == 1:
        stderr = 0.0
    else:
        stderr = float(
            math.sqrt(float(np.sum(np.abs(vals - mean) ** 2)) / (trials - 1) / trials)
        )
    return MCEstimate(mean=mean, stderr=stderr, trials=trials, seed=specs[0].seed)


@dataclass(frozen=True)
class FreenessRow:
    label: str
    empirical: float
    stderr: float
    predicted: float
    z: float


@dataclass(frozen=True)
class FreenessReport:
    kind: str
    N: int
    trials: int
    degree: int
    rows: tuple

    def max_abs_z(self) -> float:
        return max(abs(r.z) for r in self.rows)


def _zscore(emp: float, pred: float, err: float) -> float:
    if err > 0:
        return (emp - pred) / err
    return 0.0 if emp == pred else math.inf


def _nc2_colour_count(colours) -> int:
    """Non-crossing pairings of the word positions that pair equal colours."""
    n = len(colours)
    if n % 2:
        return 0

    def rec(span: tuple) -> int:
        if not span:
            return 1
        first = span[0]
        total = 0
        for j in range(1, len(span), 2):
            if colours[span[j]] == colours[first]:
                total += rec(span[1:j]) * rec(span[j + 1 :])
        return total

    return rec(tuple(range(n)))


def _bernoulli_diag(n: int) -> np.ndarray:
    d = np.ones(n)
    d[1::2] = -1.0
    return d


def _rows_from_trials(labels, pred, samples, trials) -> tuple:
    rows = []
    for j, label in enumerate(labels):
        col = samples[:, j]
        mean = float(np.sum(col.real) / trials)
        if trials > 1:
            err = math.sqrt(float(np.sum((col.real - mean) ** 2)) / (trials - 1) / trials)
        else:
            err = 0.0
        rows.append(
            FreenessRow(label, mean, err, float(pred[j]), _zscore(mean, float(pred[j]), err))
        )
    return tuple(rows)


def freeness_experiment(
    kind: str, N: int, trials: int, degree: int, seed: int = 0, workers: int = 1
) -> FreenessReport:
    """Asymptotic-freeness checks with exact predictions and z-scores.

    gue_gue: mixed words of two independent GUEs against the colour-respecting
    non-crossing pairing counts.  gue_deterministic: spectral moments of
    X + D for a balanced +-1 diagonal D against the exact free-convolution
    moments of semicircle and Bernoulli.  rotated_diagonal: moments of
    U D U* + D, U Haar, against the arcsine (Bernoulli boxplus Bernoulli)
    moments.
    """
    if kind not in ("gue_gue", "gue_deterministic", "rotated_diagonal"):
        raise ValueError(f"unknown experiment kind {kind!r}")
    if degree < 2:
        raise ValueError(f"degree must be >= 2, got {degree}")
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    if kind == "rotated_diagonal" and N % 2:
        raise ValueError("rotated_diagonal needs even N for a balanced diagonal")

    if kind == "gue_gue":
        words = [(0, 0), (0, 1), (1, 0), (1, 1)]
        if degree >= 4:
            words += [(0, 1, 0, 1), (0, 0, 1, 1)]
        if degree >= 6:
            words += [(0, 1, 0, 1, 0, 1)]
        labels = ["".join("xy"[c] for c in w) for w in words]
        pred = [float(_nc2_colour_count(w)) for w in words]
        samples = np.empty((trials, len(words)), dtype=np.complex128)

        def run_gg(t: int):
            x = _sample_rng(EnsembleSpec("gue", N, seed), _rng(seed, t, 0))
            y = _sample_rng(EnsembleSpec("gue", N, seed), _rng(seed, t, 1))
            vals = {
                (0, 0): np.sum(x * x.T),
                (0, 1): np.sum(x * y.T),
                (1, 0): np.sum(y * x.T),
                (1, 1): np.sum(y * y.T),
            }
            if degree >= 4:
                xy = x @ y
                vals[(0, 1, 0, 1)] = np.sum(xy * xy.T)
                vals[(0, 0, 1, 1)] = np.sum((x @ x) * (y @ y).T)
                if degree >= 6:
                    vals[(0, 1, 0, 1, 0, 1)] = np.sum((xy @ xy) * xy.T)
            for j, w in enumerate(words):
                samples[t, j] = vals[w] / N

        runner = run_gg
    else:
        diag = _bernoulli_diag(N)
        bern = [Fraction(0 if k % 2 else 1) for k in range(1, degree + 1)]
        if kind == "gue_deterministic":
            catalan = [
                Fraction(math.comb(k, k // 2) - (math.comb(k, k // 2 - 1) if k >= 2 else 0))
                if k % 2 == 0
                else Fraction(0)
                for k in range(1, degree + 1)
            ]
            pred = [float(v) for v in free_convolve_moments(catalan, bern)]
        else:
            pred = [float(v) for v in free_convolve_moments(bern, bern)]
        labels = [f"m{k}" for k in range(1, degree + 1)]
        samples = np.empty((trials, degree), dtype=np.complex128)

        def run_det(t: int):
            if kind == "gue_deterministic":
                x = _sample_rng(EnsembleSpec("gue", N, seed), _rng(seed, t, 0))
                m = x + np.diag(diag)
            else:
                u = _haar_unitary(_rng(seed, t, 0), N)
                m = (u * diag) @ u.conj().T + np.diag(diag)
            power = np.eye(N, dtype=np.complex128)
            for k in range(degree):
                power = power @ m
                samples[t, k] = np.trace(power) / N

        runner = run_det

    if workers <= 1:
        for t in range(trials):
            runner(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(runner, range(trials)))
    rows = _rows_from_trials(labels, pred, samples, trials)
    return FreenessReport(kind=kind, N=N, trials=trials, degree=degree, rows=rows)


def _interp_poly(xs, ys) -> list[Fraction]:
    """Exact Lagrange interpolation; coefficients ascending in N."""
    k = len(xs)
    coeffs = [Fraction(0)] * k
    for i in range(k):
        num = [Fraction(1)]
        den = Fraction(1)
        for j in range(k):
            if j == i:
                continue
            num = [
                (num[m - 1] if m else Fraction(0)) - xs[j] * (num[m] if m < len(num) else 0)
                for m in range(len(num) + 1)
            ]
            den *= xs[i] - xs[j]
        w = Fraction(ys[i]) / den
        for m, c in enumerate(num):
            coeffs[m] += w * c
    return coeffs


def geodesic_order_assembly() -> tuple:
    """Order-N^0 part of E tr[(U D U* D)^2], summed two ways.

    D is the diagonal alternating 1, 2 (deliberately non-centred so every
    order-N^0 term is non-zero).  The unitary expectation expands over row
    and column gluings (rho, sigma) in S(2) x S(2); each pair contributes an
    index-contraction polynomial T(N) (interpolated exactly from brute-force
    sums at five small dimensions, as T can reach degree 4) times the
    leading Weingarten weight a(sigma rho^{-1}) N^{-2-|sigma rho^{-1}|},
    with one more 1/N from the normalized trace.  Returns the order-N^0 sum
    over all pairs and the same sum restricted to pairs on a Cayley geodesic
    id -> sigma -> rho -> gamma^{-1}, gamma the trace 2-cycle.  The two
    agree: off-geodesic pairs only enter at negative powers.  (Both equal
    99/16, the free-product value tau(abab) = m2 m1^2 + m1^2 m2 - m1^4 at
    m1 = 3/2, m2 = 5/2.)
    """
    perms = [Permutation.identity(2), Permutation.transposition(2, 1, 2)]
    gamma_inv = Permutation.full_cycle(2).inverse()
    probes = [4, 6, 8, 10, 12]
    total_all = Fraction(0)
    total_geo = Fraction(0)
    for rho in perms:
        for sig in perms:
            ts = []
            for nn in probes:
                dvec = [1 + (i % 2) for i in range(nn)]
                acc = 0
                for a in range(nn):
                    for c in range(nn):
                        k = (c, a)
                        if a != k[rho(1) - 1] or c != k[rho(2) - 1]:
                            continue
                        for b in range(nn):
                            for bp in range(nn):
                                ell = (b, bp)
                                if b != ell[sig(1) - 1] or bp != ell[sig(2) - 1]:
                                    continue
                                acc += dvec[a] * dvec[b] * dvec[c] * dvec[bp]
                ts.append(acc)
            poly = _interp_poly([Fraction(p) for p in probes], ts)
            deg_t = max((m for m, cf in enumerate(poly) if cf), default=0)
            wg_pi = sig * rho.inverse()
            order = deg_t - (2 + wg_pi.cayley_distance) - 1
            if order > 0:
                raise AssertionError("contraction exceeds order N^0; wiring bug")
            if order == 0:
                a_pi = weingarten_series(wg_pi).leading
                term = poly[deg_t] * a_pi
                total_all += term
                if is_geodesic(sig, rho, gamma_inv):
                    total_geo += term
    return total_all, total_geo
