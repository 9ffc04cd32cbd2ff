"""Random-matrix ensembles, Wick/genus expansions, Weingarten calculus."""

import math
from fractions import Fraction

import numpy as np
import pytest

from freeprob.partitions import Permutation
from freeprob.rmt import (
    EnsembleSpec,
    freeness_experiment,
    genus_profile,
    geodesic_order_assembly,
    mc_word_moment,
    sample,
    weingarten_series,
    wick_trace_moment,
)

CATALAN = [1, 1, 2, 5, 14, 42, 132]


def dfact(n):
    out = 1
    for j in range(1, n, 2):
        out *= j
    return out


def test_wick_expansion_small_cases():
    assert wick_trace_moment(2) == {0: 1}
    assert wick_trace_moment(4) == {0: 2, 2: 1}
    assert wick_trace_moment(6) == {0: 5, 2: 10}
    assert wick_trace_moment(8) == {0: 14, 2: 70, 4: 21}


def test_wick_evaluated_at_finite_n():
    # E tr X^4 = 2 + 1/N^2
    assert wick_trace_moment(4, N=5) == Fraction(51, 25)
    assert wick_trace_moment(4, N=10) == Fraction(201, 100)
    assert wick_trace_moment(3, N=7) == 0
    assert wick_trace_moment(3) == {}


def test_wick_at_n_equals_one_counts_all_pairings():
    for k in range(1, 9):
        assert wick_trace_moment(2 * k, N=1) == dfact(2 * k)


def test_wick_guards():
    with pytest.raises(ValueError):
        wick_trace_moment(-2)
    with pytest.raises(ValueError):
        wick_trace_moment(22)


def test_genus_profile():
    assert genus_profile(1) == (1,)
    assert genus_profile(2) == (2, 1)
    assert genus_profile(3) == (5, 10)
    assert genus_profile(4) == (14, 70, 21)
    for k in range(1, 7):
        prof = genus_profile(k)
        assert prof[0] == CATALAN[k]  # planar pairings lead
        assert sum(prof) == dfact(2 * k)  # all pairings, over every genus
    with pytest.raises(ValueError):
        genus_profile(0)


def test_wick_and_genus_profile_agree():
    for k in (1, 2, 3, 4):
        exp = wick_trace_moment(2 * k)
        prof = genus_profile(k)
        assert exp == {2 * g: prof[g] for g in range(len(prof)) if prof[g]}


def test_weingarten_transposition_exact():
    e = weingarten_series(Permutation((2, 1)))
    assert e.leading == -1
    for N in (4, 10, 50):
        v = e.evaluate(N)
        assert v.exact
        assert v.error_bound == 0.0
        assert v.value == Fraction(-1, N * (N * N - 1))


def test_weingarten_identities_exact():
    one = weingarten_series(Permutation((1,))).evaluate(9)
    assert one.exact and one.value == Fraction(1, 9)
    two = weingarten_series(Permutation((1, 2))).evaluate(9)
    assert two.exact and two.value == Fraction(1, 80)


def test_weingarten_s3_within_error_bound():
    cases = [
        # (images, exact value at N)
        ((2, 3, 1), lambda N: Fraction(2, N * (N * N - 1) * (N * N - 4))),
        ((1, 2, 3), lambda N: Fraction(N * N - 2, N * (N * N - 1) * (N * N - 4))),
        ((2, 1, 3), lambda N: Fraction(-1, (N * N - 1) * (N * N - 4))),
    ]
    for images, exact in cases:
        e = weingarten_series(Permutation(images))
        for N in (6, 12):
            v = e.evaluate(N)
            err = abs(float(v.value - exact(N)))
            assert err <= v.error_bound
            assert v.error_bound < 1e-6


def test_weingarten_series_parity_and_leading():
    for images in [(2, 1), (2, 3, 1), (1, 2, 3), (2, 1, 4, 3)]:
        e = weingarten_series(Permutation(images))
        d = e.permutation.cayley_distance
        assert all(e.raw[r] == 0 for r in range(d))  # below Cayley distance
        assert all(e.raw[r] == 0 for r in range(len(e.raw)) if (r - d) % 2)
        assert e.leading == (-1) ** d * e.raw[d]


def test_weingarten_guards():
    e = weingarten_series(Permutation((2, 1)))
    with pytest.raises(ValueError):
        e.evaluate(1)  # needs N >= n
    with pytest.raises(ValueError):
        weingarten_series(Permutation(tuple(range(2, 10)) + (1,)))  # n > 8


def test_sample_is_deterministic_and_structured():
    spec = EnsembleSpec("gue", 25, seed=7)
    a = sample(spec, trial=3)
    b = sample(spec, trial=3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample(spec, trial=4))
    assert np.allclose(a, a.conj().T)  # hermitian

    u = sample(EnsembleSpec("cue", 30, seed=1))
    assert np.max(np.abs(u @ u.conj().T - np.eye(30))) < 1e-12

    g = sample(EnsembleSpec("ginibre", 12, seed=1))
    assert g.shape == (12, 12) and g.dtype == np.complex128

    d = sample(EnsembleSpec("deterministic", 3, payload=np.diag([1.0, 2.0, 3.0])))
    assert np.array_equal(d, np.diag([1.0, 2.0, 3.0]))


def test_ensemble_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec("goe", 10)
    with pytest.raises(ValueError):
        EnsembleSpec("gue", 0)
    with pytest.raises(ValueError):
        EnsembleSpec("deterministic", 4)  # payload required
    with pytest.raises(ValueError):
        EnsembleSpec("deterministic", 4, payload=np.eye(3))  # wrong shape
    with pytest.raises(ValueError):
        EnsembleSpec("deterministic", 4, payload=(1.0,) * 4)  # not a matrix
    with pytest.raises(ValueError):
        EnsembleSpec("gue", 8, payload=np.eye(8))  # payload is deterministic-only


def test_gue_covariance_normalization():
    # E (1/N) tr X^2 -> 1 under the 1/N covariance scaling
    est = mc_word_moment([EnsembleSpec("gue", 150, seed=11)], [0, 0], trials=60)
    assert abs(est.mean.real - 1) < 4 * est.stderr + 1e-3
    assert abs(est.mean.imag) < 1e-12


def test_cue_word_trace_is_exactly_unit():
    # (1/N) tr U U* = 1 for every unitary sample, so stderr is 0
    est = mc_word_moment(
        [EnsembleSpec("cue", 40, seed=5)], [(0, False), (0, True)], trials=8
    )
    assert abs(est.mean - 1) < 1e-13
    assert est.stderr < 1e-13


def test_mc_word_moment_worker_count_is_invisible():
    specs = [EnsembleSpec("gue", 30, seed=3), EnsembleSpec("gue", 30, seed=4)]
    word = [0, 1, 0, 1]
    one = mc_word_moment(specs, word, trials=24, workers=1)
    two = mc_word_moment(specs, word, trials=24, workers=2)
    eight = mc_word_moment(specs, word, trials=24, workers=8)
    assert one.mean == two.mean == eight.mean
    assert one.stderr == two.stderr == eight.stderr


def test_gue_pair_looks_free():
    rep = freeness_experiment("gue_gue", 60, 80, 6, seed=9)
    assert {r.label for r in rep.rows} >= {"xx", "xy", "yy", "xyxy", "xxyy", "xyxyxy"}
    assert rep.max_abs_z() < 4
    xy = next(r for r in rep.rows if r.label == "xyxy")
    assert xy.predicted == 0.0


def test_gue_plus_diagonal_matches_convolution():
    rep = freeness_experiment("gue_deterministic", 60, 60, 6, seed=10)
    preds = {r.label: r.predicted for r in rep.rows}
    assert preds == {"m1": 0.0, "m2": 2.0, "m3": 0.0, "m4": 7.0, "m5": 0.0, "m6": 30.0}
    assert rep.max_abs_z() < 4


def test_rotated_diagonal_matches_convolution():
    rep = freeness_experiment("rotated_diagonal", 60, 60, 4, seed=11)
    preds = {r.label: r.predicted for r in rep.rows}
    assert preds == {"m1": 0.0, "m2": 2.0, "m3": 0.0, "m4": 6.0}
    assert rep.max_abs_z() < 4


def test_freeness_experiment_validation():
    with pytest.raises(ValueError):
        freeness_experiment("haar_haar", 20, 20, 4)
    with pytest.raises(ValueError):
        freeness_experiment("gue_gue", 20, 1, 4)  # needs >= 2 trials
    with pytest.raises(ValueError):
        freeness_experiment("rotated_diagonal", 21, 20, 4)  # N must be even


def test_geodesic_order_assembly_sums_match():
    geo, full = geodesic_order_assembly()
    assert geo == Fraction(99, 16)
    assert full == Fraction(99, 16)
