import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypershift import (ESCAPE, BranchMap, FullHeightRect, Jet2, MapFamily, Point, Vector2, apply_F,
                        locate_branch, make_dyadic_family, make_perturbed_family, slope_transport,
                        unstable_derivative)
from hypershift.errors import ConeViolation, HyperbolicityViolation, InvalidArgument
from hypershift.map_model import _fd_jet, apply_F_array


def test_dyadic_branch_one_value(dyadic):
    j = dyadic.branch(1).eval(Point(0.25, 0.5))
    assert (j.f1, j.f2) == (0.5, 0.125)


def test_dyadic_strip_two(dyadic):
    s = dyadic.branch(2).image
    assert np.all(s.bottom == 0.25) and np.all(s.top == 0.375)


def test_dyadic_widths_are_powers_of_two(dyadic):
    for b in dyadic.branches:
        assert b.domain.width_max == b.domain.width_min == 2.0 ** -b.index


def test_dyadic_rejects_small_truncation():
    with pytest.raises(InvalidArgument):
        make_dyadic_family(1)


def test_zero_perturbation_matches_dyadic(dyadic):
    p = make_perturbed_family(20, 0.0, "constant", 0.0)
    rng = np.random.default_rng(3)
    idx = rng.integers(1, 21, 500)
    y = rng.random(500)
    x = dyadic.builtin.left[idx - 1] + rng.random(500) * 2.0 ** -idx
    a, b = dyadic.jet_indexed(idx, x, y), p.jet_indexed(idx, x, y)
    for name in ("f1", "f2", "f1x", "f1y", "f2x", "f2y", "f1xx", "f1xy"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_perturbed_d2_ratio_at_branch_three(pert_const):
    # |F1xx| / |F1x| at the right edge of E_3, where F1x is smallest
    j = pert_const.branch(3).jet(np.array(pert_const.builtin.right[2]), np.array(0.0))
    assert abs(j.f1xx) / abs(j.f1x) == pytest.approx(2 * 0.1 * 8 / 0.9)


@pytest.mark.parametrize("kw", [dict(eps=0.2), dict(eps=-0.1), dict(eps=0.1, shear=0.25),
                                dict(eps=0.1, decay="linear")])
def test_perturbed_rejects_bad_parameters(kw):
    with pytest.raises(InvalidArgument):
        make_perturbed_family(10, **kw)


def test_perturbed_default_K0(pert_shear):
    assert pert_shear.K0 == pytest.approx(2 * (1 - 0.05 * 1.1))


@pytest.mark.parametrize("z, expected", [((0.3, 0.7), 1), ((0.5, 0.2), None),
                                         ((1 - 2.0 ** -25, 0.5), None), ((0.0, 0.0), 1),
                                         ((0.625, 0.0), 2)])
def test_locate_branch(dyadic, z, expected):
    assert locate_branch(dyadic, Point(*z)) == expected


def test_apply_F_examples(dyadic):
    assert apply_F(dyadic, Point(0.25, 0.5)) == Point(0.5, 0.125)
    assert apply_F(dyadic, Point(0.625, 0.0)) == Point(0.5, 0.25)
    assert apply_F(dyadic, Point(0.5, 0.2)) is ESCAPE
    assert not ESCAPE


def test_apply_F_array_marks_escapes(dyadic):
    X, Y, idx = apply_F_array(dyadic, np.array([0.25, 0.5]), np.array([0.5, 0.2]))
    assert idx.tolist() == [1, 0] and X[0] == 0.5 and np.isnan(X[1])


def test_unstable_derivative_examples(dyadic):
    for i in (1, 4, 9):
        j = dyadic.branch(i).jet(np.array(dyadic.builtin.left[i - 1] + 1e-3 * 2.0 ** -i), np.array(0.3))
        assert unstable_derivative(j, 0.37) == 2.0 ** i
    j = Jet2(0.0, 0.0, 2.0, 0.4, 0.0, 0.25)
    assert unstable_derivative(j, 0.5) == pytest.approx(2.2)


def test_unstable_derivative_rejects_nonpositive():
    j = Jet2(0.0, 0.0, 1.0, -2.0, 0.0, 0.25)
    with pytest.raises(HyperbolicityViolation):
        unstable_derivative(j, 0.5)


def test_slope_transport_examples(dyadic):
    j1 = dyadic.branch(1).jet(np.array(0.2), np.array(0.4))
    j2 = dyadic.branch(2).jet(np.array(0.6), np.array(0.4))
    assert slope_transport(j1, 0.5) == 0.0625
    assert slope_transport(j2, 0.5) == 0.015625
    assert slope_transport(Jet2(0, 0, 3.0, 0.2, 0.0, 0.1), 0.0) == 0.0


def test_slope_transport_vanishing_denominator():
    with pytest.raises(ConeViolation):
        slope_transport(Jet2(0, 0, 1.0, 2.0, 0.0, 1.0), -0.5)


def test_point_and_vector_validation():
    with pytest.raises(InvalidArgument):
        Point(1.5, 0.2)
    with pytest.raises(InvalidArgument):
        Vector2(math.inf, 0.0)
    assert Vector2(-3.0, 2.0).norm() == 3.0
    assert Point(0.1, 0.2).dist(Point(0.4, 0.3)) == pytest.approx(0.3)


def test_jet_rejects_singular():
    with pytest.raises(InvalidArgument):
        Jet2(0, 0, 1.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("fam_name", ["dyadic", "pert_shear", "pert_const"])
def test_round_trip(request, fam_name):
    fam = request.getfixturevalue(fam_name)
    rng = np.random.default_rng(7)
    for b in fam.branches[:12]:
        y = rng.random(1000)
        x = b.domain.left_at(y) + rng.random(1000) * b.domain.width_at(y)
        X, Y = b.apply(x, y)
        xb, yb = b.inverse_fn(X, Y)
        assert np.max(np.maximum(np.abs(xb - x), np.abs(yb - y))) <= 1e-10


def test_analytic_jets_match_finite_differences(pert_shear):
    rng = np.random.default_rng(11)
    for i in (1, 2, 3, 5):
        b = pert_shear.branch(i)
        lo, w = b.domain.left[0], b.domain.width_max
        x = lo + w * (0.05 + 0.9 * rng.random(50))
        y = 0.05 + 0.9 * rng.random(50)
        exact = b.jet(x, y)
        fd = _fd_jet(lambda u, v: np.array(b.apply(u, v)), x, y)
        for name, tol in (("f1x", 1e-6), ("f1y", 1e-6), ("f2y", 1e-6), ("f1xx", 1e-5), ("f1xy", 1e-5)):
            a, c = getattr(exact, name), getattr(fd, name)
            scale = np.maximum(np.abs(a), 1.0)
            assert np.max(np.abs(a - c) / scale) < tol, name


def test_domain_tiling(dyadic):
    total = sum(b.domain.width_max for b in dyadic.branches)
    assert total >= 1 - 2.0 ** -20 - 1e-15


@settings(max_examples=200, deadline=None)
@given(i=st.integers(1, 20), a=st.floats(-0.5, 0.5), n=st.integers(1, 30),
       u=st.floats(0.0, 1.0), y=st.floats(0.0, 1.0))
def test_slope_transport_keeps_cone(i, a, n, u, y):
    fam = make_perturbed_family(20, 0.1, "geometric", 0.1)
    x = fam.builtin.left[i - 1] + u * 2.0 ** -i
    for _ in range(n):
        a = float(slope_transport(fam.jet_indexed(np.array(i), x, y), a))
        assert abs(a) <= fam.alpha


def test_user_family_with_finite_difference_jets():
    dom1 = FullHeightRect.vertical(0.0, 0.5, 1)
    dom2 = FullHeightRect.vertical(0.5, 1.0, 2)
    b1 = BranchMap.from_map(1, dom1, lambda x, y: (2 * x, 0.25 * y), lambda X, Y: (X / 2, 4 * Y))
    b2 = BranchMap.from_map(2, dom2, lambda x, y: (2 * x - 1, 0.5 + 0.25 * y),
                            lambda X, Y: ((X + 1) / 2, 4 * (Y - 0.5)))
    fam = MapFamily((b1, b2), 0.5, 2.0, 1.0)
    assert not fam.exact_jets
    assert apply_F(fam, Point(0.75, 0.5)) == Point(0.5, 0.625)
    assert b1.image.bottom[0] == pytest.approx(0.0) and b1.image.top[0] == pytest.approx(0.25)


def test_family_validation():
    dom = FullHeightRect.vertical(0.0, 0.6, 1)
    b = BranchMap.from_map(1, dom, lambda x, y: (x / 0.6, y / 2), lambda X, Y: (0.6 * X, 2 * Y))
    with pytest.raises(InvalidArgument):
        MapFamily((b,), 1.2, 2.0, 1.0)
    with pytest.raises(InvalidArgument):
        MapFamily((b,), 0.5, 1.0, 1.0)
    b2 = BranchMap.from_map(2, FullHeightRect.vertical(0.3, 0.9, 2), lambda x, y: (x, y), lambda X, Y: (X, Y))
    with pytest.raises(InvalidArgument):
        MapFamily((b, b2), 0.5, 2.0, 1.0)
    steep = FullHeightRect(np.linspace(0.0, 0.9, 257), np.linspace(0.1, 1.0, 257), 1)
    with pytest.raises(InvalidArgument):
        MapFamily((BranchMap.from_map(1, steep, lambda x, y: (x, y), lambda X, Y: (X, Y)),), 0.5, 2.0, 1.0)
