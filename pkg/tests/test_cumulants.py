"""Moment/cumulant transforms on both partition lattices, mixed cumulants."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from freeprob.cumulants import (
    MomentFunctional,
    classical_convolve_moments,
    cumulants_to_moments,
    mixed_cumulant,
    moments_to_cumulants,
)

# moments m_n = 2^C(n,2) count labelled graphs; their cumulants count the
# connected ones (classical lattice) and the "free-connected" ones
GRAPH_MOMENTS = [Fraction(2 ** (n * (n - 1) // 2)) for n in range(1, 8)]
CONNECTED = [1, 1, 4, 38, 728, 26704, 1866256]
FREE_CONNECTED = [1, 1, 4, 39, 748, 27162, 1880872]

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=5)


def test_graph_count_cumulants_classical():
    assert moments_to_cumulants(GRAPH_MOMENTS, lattice="classical") == CONNECTED


def test_graph_count_cumulants_free():
    assert moments_to_cumulants(GRAPH_MOMENTS, lattice="free") == FREE_CONNECTED


@pytest.mark.parametrize("lattice", ["classical", "free"])
def test_round_trip_exact(lattice):
    m = [Fraction(1, 2), Fraction(3), Fraction(-2, 5), Fraction(7), Fraction(0), Fraction(11, 3)]
    k = moments_to_cumulants(m, lattice=lattice)
    assert cumulants_to_moments(k, lattice=lattice) == m


@settings(max_examples=60)
@given(st.lists(rationals, min_size=1, max_size=6), st.sampled_from(["classical", "free"]))
def test_round_trip_property(m, lattice):
    k = moments_to_cumulants(m, lattice=lattice)
    back = cumulants_to_moments(k, lattice=lattice)
    assert back == [Fraction(v) for v in m]


def test_lattices_agree_up_to_order_three():
    # the partition lattices only differ from n=4 on (first crossing)
    m = [Fraction(1), Fraction(4), Fraction(9), Fraction(16), Fraction(25)]
    kc = moments_to_cumulants(m, lattice="classical")
    kf = moments_to_cumulants(m, lattice="free")
    assert kc[:3] == kf[:3]
    assert kc[3] != kf[3]


def test_classical_convolution_bernoulli_pair():
    # two centred coin flips: sum takes values -2, 0, 2 with weights 1/4, 1/2, 1/4
    bern = [Fraction(0), Fraction(1), Fraction(0), Fraction(1)]
    conv = classical_convolve_moments(bern, bern)
    assert conv == [Fraction(0), Fraction(2), Fraction(0), Fraction(8)]


def test_classical_convolution_is_cumulant_addition():
    mx = [Fraction(1), Fraction(2), Fraction(3), Fraction(4)]
    my = [Fraction(-1), Fraction(5), Fraction(0), Fraction(2)]
    direct = classical_convolve_moments(mx, my)
    kx = moments_to_cumulants(mx, lattice="classical")
    ky = moments_to_cumulants(my, lattice="classical")
    via_k = cumulants_to_moments([a + b for a, b in zip(kx, ky)], lattice="classical")
    assert direct == via_k


def test_moment_functional_factorizes():
    bern = [Fraction(0), Fraction(1), Fraction(0), Fraction(1)]
    cube = [Fraction(1), Fraction(1), Fraction(1), Fraction(1)]  # point mass at 1
    f = MomentFunctional.from_classical_independent({"x": bern, "y": cube}, 4)
    assert f.moment(("x", "x")) == 1
    assert f.moment(("x", "y")) == 0
    assert f.moment(("x", "y", "x", "y")) == 1  # E[x^2] E[y^2]
    assert f.moment(("y", "y", "y")) == 1
    with pytest.raises(ValueError):
        f.moment(("x",) * 5)


def test_classical_mixed_cumulants_of_independent_vanish():
    bern = [Fraction(0), Fraction(1), Fraction(0), Fraction(1)]
    f = MomentFunctional.from_classical_independent({"x": bern, "y": bern}, 4)
    for word in [("x", "y"), ("x", "x", "y"), ("x", "y", "x", "y"), ("x", "x", "y", "y")]:
        assert mixed_cumulant(f, word, lattice="classical") == 0
    # pure words recover the marginal cumulants
    assert mixed_cumulant(f, ("x", "x"), lattice="classical") == 1
    assert mixed_cumulant(f, ("x", "x", "x", "x"), lattice="classical") == -2


def test_free_mixed_cumulant_detects_classical_dependence():
    # classically independent is NOT free: the free mixed cumulant of xyxy
    # survives; its value comes from the moment 1 minus the two
    # colour-respecting NC pairings' lower terms
    bern = [Fraction(0), Fraction(1), Fraction(0), Fraction(1)]
    f = MomentFunctional.from_classical_independent({"x": bern, "y": bern}, 4)
    assert mixed_cumulant(f, ("x", "y", "x", "y"), lattice="free") == 1
