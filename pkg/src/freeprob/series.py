"""Truncated formal power series and Laurent series over exact rationals.

This module is the formal-series home of the generating functions used
throughout the package: ordinary moment series and their cumulant companions
under both the exponential formula M(z) = exp(C(z)) and its free analogue
L(z) = K(zL(z)), plus the Laurent-series pair G (moment series at infinity)
and V (its compositional inverse, a simple pole at zero) with V(G(z)) = z.

All coefficients are exact ``fractions.Fraction`` values unless the caller
feeds floats, in which case the same recursions run in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "TruncatedSeries",
    "LaurentSeries",
    "ring_op",
    "exp_log",
    "solve_free_ogf",
    "laurent_invert",
    "free_moments_from_cumulants",
    "free_cumulants_from_moments",
]


def _as_coeff(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return x


@dataclass(frozen=True)
class TruncatedSeries:
    """A power series known through degree ``order`` = len(coeffs) - 1.

    Binary operations truncate to the smaller order of the two operands; no
    operation ever reports a coefficient beyond what the inputs determine.
    """

    coeffs: tuple

    @classmethod
    def from_coeffs(cls, coeffs, order: int | None = None) -> "TruncatedSeries":
        c = [_as_coeff(x) for x in coeffs]
        if order is not None:
            c = c[: order + 1] + [Fraction(0)] * (order + 1 - len(c))
        return cls(tuple(c))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k: int):
        return self.coeffs[k]

    def truncate(self, order: int) -> "TruncatedSeries":
        if order >= self.order:
            return self
        return TruncatedSeries(self.coeffs[: order + 1])

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        n = min(self.order, other.order)
        return TruncatedSeries(tuple(self.coeffs[k] + other.coeffs[k] for k in range(n + 1)))

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        n = min(self.order, other.order)
        return TruncatedSeries(tuple(self.coeffs[k] - other.coeffs[k] for k in range(n + 1)))

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        n = min(self.order, other.order)
        out = [Fraction(0)] * (n + 1)
        for i, a in enumerate(self.coeffs[: n + 1]):
            if a == 0:
                continue
            for j in range(n + 1 - i):
                b = other.coeffs[j]
                if b != 0:
                    out[i + j] += a * b
        return TruncatedSeries(tuple(out))

    def scale(self, c) -> "TruncatedSeries":
        c = _as_coeff(c)
        return TruncatedSeries(tuple(c * a for a in self.coeffs))

    def shift(self, k: int = 1) -> "TruncatedSeries":
        """Multiply by z^k (same truncation order)."""
        return TruncatedSeries((Fraction(0),) * k + self.coeffs[: self.order + 1 - k])

    def derivative(self) -> "TruncatedSeries":
        if self.order == 0:
            return TruncatedSeries((Fraction(0),))
        return TruncatedSeries(tuple(k * self.coeffs[k] for k in range(1, self.order + 1)))

    def compose(self, inner: "TruncatedSeries") -> "TruncatedSeries":
        """self(inner(z)); inner must have zero constant term."""
        if inner.coeffs[0] != 0:
            raise ValueError("composition requires zero constant term in the inner series")
        n = min(self.order, inner.order)
        acc = TruncatedSeries((_as_coeff(self.coeffs[n]),) + (Fraction(0),) * n)
        inner_t = inner.truncate(n)
        for k in range(n - 1, -1, -1):
            acc = acc * inner_t
            acc = TruncatedSeries((acc.coeffs[0] + self.coeffs[k],) + acc.coeffs[1:])
        return acc

    def reciprocal(self) -> "TruncatedSeries":
        """1/self; the constant term must be nonzero."""
        a0 = self.coeffs[0]
        if a0 == 0:
            raise ValueError("reciprocal requires a nonzero constant term")
        inv0 = 1 / Fraction(a0) if isinstance(a0, (int, Fraction)) else 1.0 / a0
        out = [inv0]
        for n in range(1, self.order + 1):
            s = sum(self.coeffs[k] * out[n - k] for k in range(1, n + 1))
            out.append(-inv0 * s)
        return TruncatedSeries(tuple(out))

    def exp(self) -> "TruncatedSeries":
        """exp(self); requires zero constant term.  n e_n = sum k s_k e_{n-k}."""
        if self.coeffs[0] != 0:
            raise ValueError("exp requires zero constant term")
        out = [Fraction(1)]
        for n in range(1, self.order + 1):
            s = sum((k * self.coeffs[k] * out[n - k] for k in range(1, n + 1)), Fraction(0))
            out.append(s / n)
        return TruncatedSeries(tuple(out))

    def log(self) -> "TruncatedSeries":
        """log(self); requires constant term 1."""
        if self.coeffs[0] != 1:
            raise ValueError("log requires constant term 1")
        out = [Fraction(0)]
        for n in range(1, self.order + 1):
            s = sum((k * out[k] * self.coeffs[n - k] for k in range(1, n)), Fraction(0))
            out.append(self.coeffs[n] - s / n)
        return TruncatedSeries(tuple(out))


def ring_op(a: TruncatedSeries, b: TruncatedSeries | None, op: str) -> TruncatedSeries:
    """Dispatch for the basic ring operations: add, mul, compose, reciprocal-of-a."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "compose":
        return a.compose(b)
    if op == "reciprocal-of-a":
        return a.reciprocal()
    raise ValueError(f"unknown op {op!r}")


def exp_log(s: TruncatedSeries, direction: str) -> TruncatedSeries:
    """exp or log of a truncated series (the exponential-formula transform)."""
    if direction == "exp":
        return s.exp()
    if direction == "log":
        return s.log()
    raise ValueError(f"direction must be 'exp' or 'log', got {direction!r}")


class _PowerTable:
    """Lazy table of [z^j] L(z)^s for a moment list m (m[0] = 1)."""

    def __init__(self, m: list):
        self.m = m
        self.table: dict[tuple[int, int], object] = {(0, 0): Fraction(1)}

    def get(self, s: int, j: int):
        key = (s, j)
        val = self.table.get(key)
        if val is None:
            if s == 0:
                val = Fraction(0)
            else:
                val = sum(
                    self.get(s - 1, i) * self.m[j - i]
                    for i in range(j + 1)
                    if self.m[j - i] != 0
                )
                if val == 0:
                    val = Fraction(0)
            self.table[key] = val
        return val


def free_moments_from_cumulants(kappa, order: int | None = None) -> list:
    """Moments m_1..m_N from free cumulants kappa_1..kappa_N via L = K(zL).

    Extracting the degree-n coefficient of L(z) = K(zL(z)) gives
    m_n = sum_{s=1}^{n} kappa_s [z^{n-s}] L(z)^s, which only involves lower
    moments; this is the coefficient recursion run here.
    """
    kappa = list(kappa)
    n_max = len(kappa) if order is None else order
    m: list = [Fraction(1)] + [None] * n_max
    powers = _PowerTable(m)
    for n in range(1, n_max + 1):
        m[n] = sum(kappa[s - 1] * powers.get(s, n - s) for s in range(1, n + 1))
    return m[1:]


def free_cumulants_from_moments(m, order: int | None = None) -> list:
    """Inverse of :func:`free_moments_from_cumulants` (same recursion solved
    for kappa_n, the only new unknown at degree n)."""
    m = list(m)
    n_max = len(m) if order is None else order
    full = [Fraction(1)] + m
    powers = _PowerTable(full)
    kappa: list = []
    for n in range(1, n_max + 1):
        s = sum(kappa[j - 1] * powers.get(j, n - j) for j in range(1, n))
        kappa.append(full[n] - s)
    return kappa


def solve_free_ogf(series: TruncatedSeries, direction: str) -> TruncatedSeries:
    """Solve the free functional equation L(z) = K(zL(z)) in either direction.

    direction "K->L": series is K (constant term 1), returns L.
    direction "L->K": series is L (constant term 1), returns K.
    Round trips are identities to the truncation order.

    >>> K = TruncatedSeries.from_coeffs([1, 0, 1], order=8)
    >>> solve_free_ogf(K, "K->L").coeffs[::2]
    (Fraction(1, 1), Fraction(1, 1), Fraction(2, 1), Fraction(5, 1), Fraction(14, 1))
    """
    if series.coeffs[0] != 1:
        raise ValueError("input must have constant term 1")
    n = series.order
    if direction == "K->L":
        m = free_moments_from_cumulants(series.coeffs[1:], order=n)
        return TruncatedSeries.from_coeffs([1] + m)
    if direction == "L->K":
        kappa = free_cumulants_from_moments(series.coeffs[1:], order=n)
        return TruncatedSeries.from_coeffs([1] + kappa)
    raise ValueError(f"direction must be 'K->L' or 'L->K', got {direction!r}")


@dataclass(frozen=True)
class LaurentSeries:
    """Finitely many ascending powers of a formal variable, starting possibly
    below zero.

    ``coeffs[k]`` is the coefficient of x^(leading_index + k) where x is the
    series' own variable.  Two shapes appear in practice:

    * V-form (pole at zero): leading_index = -1 in the variable w, e.g.
      V(w) = 1/w + kappa_1 + kappa_2 w + ...
    * G-form (vanishing at infinity): leading_index = +1 in the reciprocal
      variable u = 1/z, e.g. G(z) = u + m_1 u^2 + ... = 1/z + m_1/z^2 + ...
      (a simple zero at infinity cannot be stored as ascending powers of z
      itself, so the reciprocal variable is the series' native one).
    """

    leading_index: int
    coeffs: tuple

    @classmethod
    def from_coeffs(cls, leading_index: int, coeffs) -> "LaurentSeries":
        c = tuple(_as_coeff(x) for x in coeffs)
        if c and all(x == 0 for x in c):
            raise ValueError("identically zero Laurent series")
        if c and c[0] == 0:
            raise ValueError("leading coefficient must be nonzero")
        return cls(leading_index, c)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1


def _newton_solve(phi, dphi, order: int):
    """Solve phi(M) = 0 for a power series M with M(0) = 1 by Newton iteration.

    phi/dphi map a TruncatedSeries to a TruncatedSeries; the correct order of
    the iterate doubles each step, so the working truncation does too.
    """
    m = TruncatedSeries.from_coeffs([1], order=0)
    correct = 0
    while correct < order:
        correct = min(2 * correct + 1, order)
        m = TruncatedSeries.from_coeffs(m.coeffs, order=correct)
        residual = phi(m)
        update = residual * dphi(m).reciprocal()
        m = m - update
    return m


def laurent_invert(series: LaurentSeries) -> LaurentSeries:
    """Compositional inverse across the V-form/G-form pair, by Newton iteration.

    A V-form input (simple pole of residue one at zero) returns the G-form
    series with V(G(z)) = z; a G-form input returns the V-form series.
    Applying the operation twice returns the original series.
    """
    if not series.coeffs or series.coeffs[0] != 1:
        raise ValueError("leading coefficient must be 1 (simple pole of residue one)")
    order = series.order

    def one(k):
        return TruncatedSeries.from_coeffs([1], order=k)

    def var(k):
        return TruncatedSeries.from_coeffs([0, 1], order=k)

    # Padding with zeros below is sound: every padded series enters only via a
    # shifted composition whose top padded coefficient falls beyond the
    # truncation order of the result.

    if series.leading_index == -1:
        # V = 1/w + kappa_1 + kappa_2 w + ...; seek G(z) = u M(u), u = 1/z,
        # M(0) = 1.  V(G) = z becomes  1/M + u R(uM) - 1 = 0  with
        # R(w) = kappa_1 + kappa_2 w + ....
        kappas = series.coeffs[1:]

        def phi(m):
            k = m.order
            um = var(k) * m
            r_k = TruncatedSeries.from_coeffs(kappas, order=k)
            return m.reciprocal() + r_k.compose(um).shift(1) - one(k)

        def dphi(m):
            k = m.order
            um = var(k) * m
            rp = TruncatedSeries.from_coeffs(kappas, order=k).derivative()
            rp_k = TruncatedSeries.from_coeffs(rp.coeffs, order=k)
            return rp_k.compose(um).shift(2) - (m * m).reciprocal()

        m = _newton_solve(phi, dphi, order)
        return LaurentSeries(1, m.coeffs)

    if series.leading_index == 1:
        # G = u M(u); seek V(w) = P(w)/w with P(0) = 1.  G(V(w)) = w becomes
        # M(w/P) / P - 1 = 0.
        mom = series.coeffs

        def phi(p):
            k = p.order
            mom_k = TruncatedSeries.from_coeffs(mom, order=k)
            wp = var(k) * p.reciprocal()
            return mom_k.compose(wp) * p.reciprocal() - one(k)

        def dphi(p):
            k = p.order
            mom_k = TruncatedSeries.from_coeffs(mom, order=k)
            pinv = p.reciprocal()
            wp = var(k) * pinv
            md = TruncatedSeries.from_coeffs(mom_k.derivative().coeffs, order=k)
            return (md.compose(wp).shift(1) * pinv + mom_k.compose(wp)).scale(-1) * (pinv * pinv)

        p = _newton_solve(phi, dphi, order)
        return LaurentSeries(-1, p.coeffs)

    raise ValueError(
        f"wrong pole structure: leading_index must be -1 (V-form) or +1 (G-form), got {series.leading_index}"
    )
