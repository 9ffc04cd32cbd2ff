"""Additive free convolution by two routes, plus its limit theorems.

Moment route: free cumulants linearize the operation, so convolving moment
sequences is cumulant extraction, addition, and resummation -- exact in
rational arithmetic via the one-sided functional-equation recursion.

Analytic route: Voiculescu's four-step algorithm run numerically.  At each
output point z = t + i*eta the two Cauchy transforms are inverted by an inner
Newton iteration, the R-transforms added, and the defining equation

    G_X^{-1}(g) + G_Y^{-1}(g) - 1/g = z

solved for g = G_{X boxplus Y}(z) by an outer Newton.  The Nevanlinna branch
(Im g < 0) is pinned by continuation: each column starts high above the real
axis where g ~ 1/z, then descends a geometric eta ladder, each level seeding
the next.  Stieltjes inversion of the resulting boundary values produces the
output measure.

The semicircle flow f_mu(s) = mu boxplus (semicircle of variance s) satisfies
the complex inviscid Burgers equation d_s G + G d_z G = 0 in the variance
variable s; parametrizing by the radius instead leaves a nonzero residual
(checked numerically on mu = delta_0, where both flows have closed forms).
`semicircle_flow_residual` therefore differentiates in s = r^2/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .measures import Measure, cauchy, make_named
from .measures import moments as measure_moments
from .measures import stieltjes_invert, support_radius
from .series import free_cumulants_from_moments, free_moments_from_cumulants

__all__ = [
    "ConvolutionResult",
    "ContinuationError",
    "free_convolve_moments",
    "free_convolve_analytic",
    "convolved_cauchy",
    "free_poisson",
    "free_clt",
    "semicircle_flow_residual",
]


class ContinuationError(RuntimeError):
    """Continuation to the real axis failed; carries the offending point."""

    def __init__(self, message: str, z: complex):
        super().__init__(message)
        self.z = z


@dataclass(frozen=True)
class ConvolutionResult:
    moments: tuple
    measure: Measure | None
    diagnostics: tuple  # (continuation residual, max functional-equation residual)


def free_convolve_moments(mx, my) -> list:
    """Moments of X boxplus Y from the moments of X and Y (exact on rationals)."""
    if len(mx) != len(my):
        raise ValueError(f"moment sequences differ in length: {len(mx)} vs {len(my)}")
    kx = free_cumulants_from_moments(mx)
    ky = free_cumulants_from_moments(my)
    return free_moments_from_cumulants([a + b for a, b in zip(kx, ky)])


def _bounds(mu: Measure) -> tuple:
    lo = math.inf
    hi = -math.inf
    for loc, _ in mu.atoms:
        lo = min(lo, loc)
        hi = max(hi, loc)
    if mu.support is not None:
        lo = min(lo, mu.support[0])
        hi = max(hi, mu.support[1])
    return lo, hi


def _eta_ladder(eta_top: float, target: float) -> np.ndarray:
    if target >= eta_top:
        return np.array([target])
    n = max(4, int(math.ceil(math.log(eta_top / target) / math.log(1.0 / 0.35))) + 1)
    return np.geomspace(eta_top, target, n)


def _solve_point(tre: float, target_eta: float, xparts, yparts, eta_top: float):
    etas = _eta_ladder(eta_top, target_eta)
    gs, worst, final, ok = _kernels.solve_convolution_column(tre, etas, xparts, yparts, eta_top)
    return complex(gs[-1]), float(worst), float(final), bool(ok)


def convolved_cauchy(mu_x: Measure, mu_y: Measure, z) -> complex:
    """G of mu_x boxplus mu_y at one point z (Im z > 0), by continuation."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("convolved_cauchy needs Im z > 0")
    eta_top = max(10.0 * (support_radius(mu_x) + support_radius(mu_y)), 1.0, 2.0 * abs(z))
    g, worst, final, ok = _solve_point(z.real, z.imag, mu_x._parts, mu_y._parts, eta_top)
    if not ok:
        raise ContinuationError(
            f"continuation failed at z = {z} (residual {max(worst, final):.3e})", z
        )
    return g


def free_convolve_analytic(
    mu_x: Measure,
    mu_y: Measure,
    grid_size: int = 512,
    eta: float = 1e-3,
    n_moments: int = 6,
) -> ConvolutionResult:
    """Voiculescu's algorithm on measures; returns moments, measure, residuals."""
    for mu in (mu_x, mu_y):
        if mu.support is None and not mu.atoms:
            raise ValueError("input measure is empty")
    ax, bx = _bounds(mu_x)
    ay, by = _bounds(mu_y)
    a, b = ax + ay, bx + by
    pad = 0.1 * max(b - a, 1.0)
    eta_top = max(10.0 * (support_radius(mu_x) + support_radius(mu_y)), 1.0)

    xparts, yparts = mu_x._parts, mu_y._parts
    worst_cont = 0.0
    worst_final = 0.0

    def transform(zs: np.ndarray) -> np.ndarray:
        nonlocal worst_cont, worst_final
        out = np.empty(zs.shape, dtype=np.complex128)
        for i, z in enumerate(zs):
            g, worst, final, ok = _solve_point(z.real, z.imag, xparts, yparts, eta_top)
            if not ok:
                raise ContinuationError(
                    f"continuation failed at z = {complex(z)} (residual {max(worst, final):.3e})",
                    complex(z),
                )
            worst_cont = max(worst_cont, worst)
            worst_final = max(worst_final, final)
            out[i] = g
        return out

    raw = stieltjes_invert(transform, (a - pad, b + pad), grid_size=grid_size, eps=eta)
    measure = Measure(
        atoms=raw.atoms, support=raw.support, samples=raw.samples, edges=raw.edges, normalize=True
    )

    mx = measure_moments(mu_x, n_moments) if _has_density(mu_x) else _atom_moments(mu_x, n_moments)
    my = measure_moments(mu_y, n_moments) if _has_density(mu_y) else _atom_moments(mu_y, n_moments)
    mom = free_convolve_moments(list(mx), list(my))
    return ConvolutionResult(
        moments=tuple(float(v) for v in mom),
        measure=measure,
        diagnostics=(worst_cont, worst_final),
    )


def _has_density(mu: Measure) -> bool:
    return mu.support is not None


def _atom_moments(mu: Measure, n_max: int) -> list:
    out = []
    for n in range(1, n_max + 1):
        out.append(sum(m * loc**n for loc, m in mu.atoms))
    return out


def free_poisson(lam, alpha, n_copies: int, order: int) -> list:
    """Moments of mu_N^{boxplus N}, mu_N = (1-lam/N) delta_0 + (lam/N) delta_alpha.

    Exact: the free cumulants of the N-fold convolution are N times those of
    mu_N, whose moments are (lam/N) alpha^n.
    """
    lam = Fraction(lam)
    alpha = Fraction(alpha)
    if lam <= 0 or alpha <= 0:
        raise ValueError("lam and alpha must be positive")
    if n_copies <= lam:
        raise ValueError(f"need N > lam for mu_N to be a probability measure; got N={n_copies}")
    if order < 1:
        raise ValueError("order must be at least 1")
    m_single = [(lam / n_copies) * alpha**n for n in range(1, order + 1)]
    kappa = [n_copies * k for k in free_cumulants_from_moments(m_single)]
    return free_moments_from_cumulants(kappa)


def free_clt(m_base, n_copies: int, order: int | None = None) -> list:
    """Moments of (X_1 + ... + X_N)/sqrt(N) for freely independent copies.

    kappa_n scales by N^{1-n/2}; results stay exact rationals when every odd
    cumulant beyond the first vanishes or N is a perfect square, and fall back
    to floats otherwise.
    """
    if order is None:
        order = len(m_base)
    m_base = list(m_base)[:order]
    if n_copies < 1:
        raise ValueError("need at least one copy")
    if len(m_base) < 2:
        raise ValueError("need moments up to order 2")
    if m_base[0] != 0:
        raise ValueError(f"base must be centered; m1 = {m_base[0]}")
    if m_base[1] != 1:
        raise ValueError(f"base must have unit variance; m2 = {m_base[1]}")
    kappa = free_cumulants_from_moments(m_base)
    root = math.isqrt(n_copies)
    exact_root = root * root == n_copies
    scaled = []
    exact = True
    for i, k in enumerate(kappa):
        n = i + 1
        if k == 0:
            scaled.append(k)
        elif n % 2 == 0:
            scaled.append(k * Fraction(1, n_copies) ** ((n - 2) // 2))
        elif exact_root:
            # N^{1-n/2} = root^{2-n}
            scaled.append(k * Fraction(1, root) ** (n - 2))
        else:
            exact = False
            scaled.append(float(k) * float(n_copies) ** (1 - n / 2))
    if not exact:
        scaled = [float(s) for s in scaled]
    return free_moments_from_cumulants(scaled)


def semicircle_flow_residual(mu: Measure, r: float, z: complex, h: float) -> complex:
    """Finite-difference Burgers residual d_s G + G d_z G of the semicircle flow.

    The flow member at radius r carries variance s = r^2/4, and s is the
    variable in which the PDE holds (see module docstring); both derivatives
    are second-order central differences with step h.
    """
    z = complex(z)
    r = float(r)
    h = float(h)
    if z.imag < 0.1:
        raise ValueError("need Im z >= 0.1")
    if r <= 0 or h <= 0:
        raise ValueError("r and h must be positive")
    s0 = r * r / 4.0
    if h >= s0:
        raise ValueError(f"step h={h} too large for flow variance {s0}")

    def g_at(s: float, zz: complex) -> complex:
        member = make_named("semicircle", 4096, r=2.0 * math.sqrt(s))
        return convolved_cauchy(mu, member, zz)

    g0 = g_at(s0, z)
    ds = (g_at(s0 + h, z) - g_at(s0 - h, z)) / (2.0 * h)
    dz = (g_at(s0, z + h) - g_at(s0, z - h)) / (2.0 * h)
    return ds + g0 * dz
