"""Computational free probability.

Exact partition/cumulant combinatorics, truncated-series transforms, measures
and Stieltjes inversion, free additive convolution (exact moment route and
analytic continuation route), random walks on lattices and free groups,
group-algebra and Fock-space models of freeness, and random-matrix checks
(Wick/genus expansions, Weingarten calculus, reproducible Monte Carlo).

Heavy numerical kernels (Cauchy-transform quadrature and the convolution
continuation solver) are compiled with numba when available; set
FREEPROB_BACKEND=numpy to force the pure-numpy twins, FREEPROB_BACKEND=numba
to require compilation (import fails if numba is missing), or leave it on
auto to compile when possible.
"""

from . import (
    cumulants,
    freeconv,
    measures,
    models,
    partitions,
    rmt,
    series,
    walks,
)
from .freeconv import ContinuationError, free_convolve_analytic, free_convolve_moments
from .measures import Measure, make_named
from .partitions import Partition, Permutation, enumerate_partitions

__all__ = [
    "partitions",
    "series",
    "cumulants",
    "measures",
    "freeconv",
    "walks",
    "models",
    "rmt",
    "Partition",
    "Permutation",
    "enumerate_partitions",
    "Measure",
    "make_named",
    "ContinuationError",
    "free_convolve_analytic",
    "free_convolve_moments",
]

__version__ = "0.1.0"
