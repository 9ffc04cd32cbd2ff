"""Probability measures on the real line: atoms plus gridded densities.

A `Measure` carries point masses and an optional density sampled on a uniform
grid.  Edges behaving like a power of the distance x to the support endpoint
are marked per side: ``"invsqrt"`` (arcsine-type blowup ~ x^-1/2), ``"sqrt"``
(semicircle-type vanishing ~ x^1/2), or ``"regular"`` (smooth).  For the two
singular models the outermost band of cells is integrated in the substituted
variable y = sqrt(x), where the integrand is smooth, instead of trusting the
trapezoid rule on a fractional power.  Interior cells use plain trapezoid
weights for real integrals and an exact piecewise-linear formula for the
Cauchy transform, which stays accurate for Im z far below the grid spacing.

Named laws: semicircle(r), arcsine, bernoulli, marchenko_pastur(lam, alpha),
sato_tate, point(c).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import _kernels

__all__ = [
    "Measure",
    "NamedLaw",
    "InversionError",
    "make_named",
    "moments",
    "cauchy",
    "stieltjes_invert",
    "to_json",
    "from_json",
    "to_csv",
    "support_radius",
]

NAMED_TAGS = ("semicircle", "arcsine", "bernoulli", "marchenko_pastur", "sato_tate", "point")

_EMPTY = np.empty(0, dtype=np.float64)


class InversionError(RuntimeError):
    """Stieltjes inversion produced a significantly negative density."""


@dataclass(frozen=True)
class NamedLaw:
    tag: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in NAMED_TAGS:
            raise ValueError(f"unknown law {self.tag!r}; expected one of {NAMED_TAGS}")
        object.__setattr__(self, "params", dict(self.params))


@dataclass
class Measure:
    """Atoms plus an optional uniform-grid density on [a, b].

    ``edges`` marks each side of the support as "regular" or "invsqrt".
    With ``normalize=True`` the density samples are rescaled so the measure's
    own quadrature rule integrates to exactly 1 - (atom mass); inversion
    output skips this so that mass defects stay visible to the caller.
    """

    atoms: tuple = ()
    support: tuple | None = None
    samples: np.ndarray | None = None
    edges: tuple = ("regular", "regular")
    normalize: bool = True

    def __post_init__(self):
        self.atoms = tuple((float(l), float(m)) for l, m in self.atoms)
        for _, m in self.atoms:
            if not (0.0 < m <= 1.0 + 1e-12):
                raise ValueError(f"atom mass {m} outside (0, 1]")
        if (self.support is None) != (self.samples is None):
            raise ValueError("support and samples must be given together")
        if self.samples is not None:
            a, b = float(self.support[0]), float(self.support[1])
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ValueError(f"bad support [{a}, {b}]")
            self.support = (a, b)
            self.samples = np.ascontiguousarray(np.asarray(self.samples, dtype=np.float64))
            if self.samples.ndim != 1 or self.samples.size < 2:
                raise ValueError("density needs at least 2 samples")
            if np.any(self.samples < 0.0):
                raise ValueError("density samples must be non-negative")
            if np.any(~np.isfinite(self.samples)):
                raise ValueError("density samples must be finite")
        for side in self.edges:
            if side not in ("regular", "sqrt", "invsqrt"):
                raise ValueError(f"unknown edge model {side!r}")
        self.edges = tuple(self.edges)
        self._build()

    # -- integration tables -------------------------------------------------

    def _build(self):
        locs = np.array([l for l, _ in self.atoms], dtype=np.float64)
        masses = np.array([m for _, m in self.atoms], dtype=np.float64)
        atom_mass = float(masses.sum())
        if self.samples is None:
            if self.normalize and abs(atom_mass - 1.0) > 1e-9:
                raise ValueError(f"atom masses sum to {atom_mass}, not 1")
            self._parts = (locs, masses, _EMPTY, _EMPTY, 0, 0, _EMPTY, _EMPTY)
            return

        a, b = self.support
        G = self.samples.size
        h = (b - a) / (G - 1)
        t = np.linspace(a, b, G)
        f = self.samples.copy()

        n_band = max(8, G // 128)
        n_band = min(n_band, (G - 1) // 3)
        lo, hi = 0, G - 1
        bands = []
        if self.edges[0] != "regular":
            lo = n_band
            bands.append(self._band_nodes(a, h, n_band, f[: n_band + 1], +1.0, self.edges[0]))
        if self.edges[1] != "regular":
            hi = G - 1 - n_band
            bands.append(self._band_nodes(b, h, n_band, f[::-1][: n_band + 1], -1.0, self.edges[1]))
        if bands:
            S = np.concatenate([s for s, _ in bands])
            W = np.concatenate([w for _, w in bands])
        else:
            S, W = _EMPTY.copy(), _EMPTY.copy()

        cell_f = 0.5 * h * (f[lo:hi] + f[lo + 1 : hi + 1])
        cont_mass = float(cell_f.sum() + W.sum())
        if self.normalize:
            target = 1.0 - atom_mass
            if target < -1e-12:
                raise ValueError("atom masses exceed 1")
            target = max(target, 0.0)
            if cont_mass > 0.0:
                scale = target / cont_mass
                f *= scale
                W *= scale
                self.samples = f
            elif abs(target) > 1e-9:
                raise ValueError("zero density cannot carry the remaining mass")
        self._parts = (
            locs,
            masses,
            np.ascontiguousarray(t),
            np.ascontiguousarray(f),
            lo,
            hi,
            np.ascontiguousarray(S),
            np.ascontiguousarray(W),
        )

    @staticmethod
    def _band_nodes(edge, h, n_band, f_side, orient, model):
        """Sub-cell quadrature for one singular edge band.

        Writes the band density as C(x)*x^p, x = distance from the edge and
        p = -1/2 ("invsqrt") or +1/2 ("sqrt"), with C piecewise linear through
        C_k = f_k*x_k^(-p); substituting x = y^2 turns ∫ f g dx into
        ∫ 2 C(y²) y^(2p+1) g dy with a smooth integrand, which a fine
        trapezoid rule in y handles.  Returns nodes on the t axis and weights
        for ∫ f·g ≈ Σ W g(S).
        """
        x_nodes = h * np.arange(n_band + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            if model == "invsqrt":
                c_nodes = f_side * np.sqrt(x_nodes)
            else:
                c_nodes = f_side / np.sqrt(x_nodes)
        c_nodes[0] = max(2.0 * c_nodes[1] - c_nodes[2], 0.0)
        m_sub = 8 * n_band
        y = np.linspace(0.0, math.sqrt(n_band * h), m_sub + 1)
        c_y = np.interp(y * y, x_nodes, c_nodes)
        wy = np.full(m_sub + 1, y[1] - y[0])
        wy[0] *= 0.5
        wy[-1] *= 0.5
        S = edge + orient * y * y
        if model == "invsqrt":
            W = 2.0 * c_y * wy
        else:
            W = 2.0 * c_y * y * y * wy
        return S, W

    # -- convenience --------------------------------------------------------

    @property
    def grid(self):
        if self.support is None:
            return None
        return np.linspace(self.support[0], self.support[1], self.samples.size)

    def total_mass(self):
        locs, masses, t, f, lo, hi, S, W = self._parts
        cont = 0.0
        if self.samples is not None:
            h = t[1] - t[0]
            cont = float(np.sum(0.5 * h * (f[lo:hi] + f[lo + 1 : hi + 1])) + W.sum())
        return float(masses.sum()) + cont


def make_named(law, grid_size: int = 2048, **params) -> Measure:
    """Build a named law; `law` is a NamedLaw or a tag string with kwargs."""
    if isinstance(law, NamedLaw):
        tag, p = law.tag, dict(law.params)
    else:
        tag, p = str(law), dict(params)
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")

    if tag == "semicircle":
        r = float(p.pop("r", 2.0))
        _no_extra(tag, p)
        if r <= 0:
            raise ValueError("semicircle radius must be positive")
        t = np.linspace(-r, r, grid_size)
        dens = (2.0 / (math.pi * r * r)) * np.sqrt(np.maximum(r * r - t * t, 0.0))
        return Measure(support=(-r, r), samples=dens, edges=("sqrt", "sqrt"))

    if tag == "arcsine":
        _no_extra(tag, p)
        t = np.linspace(-2.0, 2.0, grid_size)
        dens = np.zeros_like(t)
        inner = slice(1, -1)
        dens[inner] = 1.0 / (math.pi * np.sqrt(4.0 - t[inner] ** 2))
        return Measure(support=(-2.0, 2.0), samples=dens, edges=("invsqrt", "invsqrt"))

    if tag == "bernoulli":
        _no_extra(tag, p)
        return Measure(atoms=((-1.0, 0.5), (1.0, 0.5)))

    if tag == "marchenko_pastur":
        lam = float(p.pop("lam", p.pop("λ", 1.0)))
        alpha = float(p.pop("alpha", p.pop("α", 1.0)))
        _no_extra(tag, p)
        if lam <= 0 or alpha <= 0:
            raise ValueError("marchenko_pastur needs lam > 0 and alpha > 0")
        t_lo = alpha * (1.0 - math.sqrt(lam)) ** 2
        t_hi = alpha * (1.0 + math.sqrt(lam)) ** 2
        t = np.linspace(t_lo, t_hi, grid_size)
        rad = 4.0 * lam * alpha * alpha - (t - alpha * (1.0 + lam)) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = np.sqrt(np.maximum(rad, 0.0)) / (2.0 * math.pi * alpha * t)
        dens[~np.isfinite(dens)] = 0.0
        dens[dens < 0.0] = 0.0
        atoms = ()
        if lam < 1.0:
            atoms = ((0.0, 1.0 - lam),)
        left = "invsqrt" if abs(lam - 1.0) < 1e-12 else "sqrt"
        if left == "invsqrt":
            dens[0] = 0.0
        return Measure(atoms=atoms, support=(t_lo, t_hi), samples=dens, edges=(left, "sqrt"))

    if tag == "sato_tate":
        _no_extra(tag, p)
        t = np.linspace(0.0, math.pi, grid_size)
        dens = (2.0 / math.pi) * np.sin(t) ** 2
        return Measure(support=(0.0, math.pi), samples=dens)

    if tag == "point":
        c = float(p.pop("c", 0.0))
        _no_extra(tag, p)
        return Measure(atoms=((c, 1.0),))

    raise ValueError(f"unknown law {tag!r}; expected one of {NAMED_TAGS}")


def _no_extra(tag, p):
    if p:
        raise ValueError(f"unexpected parameters for {tag}: {sorted(p)}")


def moments(mu: Measure, n_max: int) -> np.ndarray:
    """Moments m_1..m_n_max (index i holds m_{i+1})."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    locs, masses, t, f, lo, hi, S, W = mu._parts
    out = np.empty(n_max, dtype=np.float64)
    if mu.samples is not None:
        h = t[1] - t[0]
        cw = np.zeros_like(f)
        np.add.at(cw, np.arange(lo, hi), 0.5 * h * f[lo:hi])
        np.add.at(cw, np.arange(lo + 1, hi + 1), 0.5 * h * f[lo + 1 : hi + 1])
    for n in range(1, n_max + 1):
        val = float(np.sum(masses * locs**n))
        if mu.samples is not None:
            val += float(np.sum(cw * t**n)) + float(np.sum(W * S**n))
        out[n - 1] = val
    return out


def cauchy(mu: Measure, z):
    """Cauchy transform G_mu(z); z may be a complex scalar or array."""
    zs = np.asarray(z, dtype=np.complex128)
    near_axis = np.abs(zs.imag) <= 1e-12
    if np.any(near_axis):
        re = zs.real[near_axis] if zs.ndim else np.array([zs.real])
        for x in np.atleast_1d(re):
            for loc, _ in mu.atoms:
                if abs(x - loc) <= 1e-12:
                    raise ValueError(f"z = {x} is on an atom of the measure")
            if mu.support is not None:
                a, b = mu.support
                if a - 1e-12 <= x <= b + 1e-12:
                    raise ValueError(f"z = {x} lies on the support [{a}, {b}]")
    vals = _kernels.cauchy_many(zs.ravel(), mu._parts)
    if zs.ndim == 0:
        return complex(vals[0])
    return vals.reshape(zs.shape)


def cauchy_with_derivative(mu: Measure, z) -> tuple:
    """(G(z), G'(z)) at a single complex point; used by the inversion solvers."""
    return _kernels.cauchy_scalar(complex(z), mu._parts)


def support_radius(mu: Measure) -> float:
    r = 0.0
    for loc, _ in mu.atoms:
        r = max(r, abs(loc))
    if mu.support is not None:
        r = max(r, abs(mu.support[0]), abs(mu.support[1]))
    return r


def _eval_transform(G: Callable, zs: np.ndarray) -> np.ndarray:
    """Evaluate a callable Cauchy transform on an array, tolerating scalar-only callables."""
    try:
        vals = np.asarray(G(zs), dtype=np.complex128)
        if vals.shape == zs.shape:
            return vals
    except TypeError:
        pass  # scalar-only callable; fall through to the loop
    return np.array([complex(G(complex(z))) for z in zs], dtype=np.complex128)


def stieltjes_invert(G: Callable, support_hint, grid_size: int = 2048, eps: float = 1e-3) -> Measure:
    """Recover a measure from its Cauchy transform.

    Density via -Im G(t + i*eps)/pi with Richardson extrapolation between eps
    and eps/2.  Atoms are flagged where eps*|Im G| exceeds 0.1*sqrt(eps) and
    the two-level mass estimates agree (a pole's estimate is eps-independent,
    a bounded density's halves), then located by a parabolic fit to the
    reciprocal estimate and measured as the extrapolated pole mass.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    a, b = float(support_hint[0]), float(support_hint[1])
    if not a < b:
        raise ValueError("support_hint must be an increasing pair")
    n_grid = int(grid_size)
    if n_grid < 64:
        raise ValueError("grid_size must be at least 64")
    if n_grid % 2 == 0:
        n_grid += 1  # keep the hint midpoint on the grid; atoms often sit there
    t = np.linspace(a, b, n_grid)
    h = t[1] - t[0]
    g1 = _eval_transform(G, t + 1j * eps)
    g2 = _eval_transform(G, t + 1j * eps / 2.0)
    d1 = -g1.imag / math.pi
    d2 = -g2.imag / math.pi
    dens = 2.0 * d2 - d1

    mass1 = eps * np.abs(g1.imag)
    threshold = 0.1 * math.sqrt(eps)

    atoms = []
    idx = np.flatnonzero(mass1 > threshold)
    if idx.size:
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        for run in runs:
            k = run[np.argmax(mass1[run])]
            loc = t[k]
            if 0 < k < n_grid - 1 and mass1[k - 1] > 0 and mass1[k + 1] > 0:
                # near a pole, 1/mass1 is a parabola in t with vertex at the atom
                y0, y1, y2 = 1.0 / mass1[k - 1], 1.0 / mass1[k], 1.0 / mass1[k + 1]
                denom = y0 - 2.0 * y1 + y2
                if denom > 0:
                    shift = 0.5 * (y0 - y2) / denom
                    if abs(shift) <= 1.0:
                        loc = t[k] + shift * h
            # decide pole vs steep density at the refined point: a pole's
            # eta*|Im G| is eta-independent, a bounded density's halves
            za = complex(loc, eps)
            zb = complex(loc, eps / 2.0)
            ma = eps * abs(_eval_transform(G, np.array([za]))[0].imag)
            mb = (eps / 2.0) * abs(_eval_transform(G, np.array([zb]))[0].imag)
            if mb <= 0.0 or not (0.8 < ma / mb < 1.25):
                continue
            mass = 2.0 * mb - ma
            if mass > threshold:
                atoms.append((float(loc), float(min(mass, 1.0))))

    if float(dens.min()) < -1e-6:
        k = int(np.argmin(dens))
        raise InversionError(
            f"density {dens[k]:.3e} at t={t[k]:.6g}: negative beyond tolerance "
            "(wrong branch or non-Nevanlinna input)"
        )
    dens = np.maximum(dens, 0.0)

    # blank the Richardson residue of each atom's pole out of the density
    for loc, mass in atoms:
        radius = max(3.0 * h, 10.0 * eps, (3.0 * mass * eps**3 / (4.0 * math.pi * 1e-4)) ** 0.25)
        dens[np.abs(t - loc) < radius] = 0.0

    return Measure(atoms=tuple(atoms), support=(a, b), samples=dens, normalize=False)


# -- serialization ----------------------------------------------------------


def to_json(mu: Measure) -> str:
    obj = {
        "atoms": [[loc, mass] for loc, mass in mu.atoms],
        "support": list(mu.support) if mu.support is not None else None,
        "density": mu.samples.tolist() if mu.samples is not None else [],
    }
    if mu.edges != ("regular", "regular"):
        obj["edges"] = list(mu.edges)
    return json.dumps(obj)


def from_json(text: str) -> Measure:
    obj = json.loads(text)
    support = tuple(obj["support"]) if obj.get("support") else None
    samples = np.asarray(obj.get("density", []), dtype=np.float64) if support else None
    edges = tuple(obj.get("edges", ("regular", "regular")))
    return Measure(
        atoms=tuple((l, m) for l, m in obj.get("atoms", [])),
        support=support,
        samples=samples,
        edges=edges,
        normalize=False,
    )


def to_csv(mu: Measure) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "density"])
    if mu.support is not None:
        for ti, fi in zip(mu.grid, mu.samples):
            writer.writerow([repr(float(ti)), repr(float(fi))])
    return buf.getvalue()
