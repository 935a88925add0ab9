import math

import numpy as np
import pytest

from hypershift import make_perturbed_family
from hypershift.errors import InvalidArgument
from hypershift.manifolds import (bounded_ratio_suite, cylinder_sections, fit_decay, gap_sequence,
                                  reference_unstable, slope_field_gap, stable_curve, unstable_curve,
                                  variation_log_Du, variation_sequence)
from hypershift.symbolic import build_mixed, build_strip


def test_reference_unstable_dyadic_is_bottom_edge(dyadic):
    ref = reference_unstable(dyadic)
    assert np.all(ref.ordinate == 0.0) and np.all(ref.slopes == 0.0)


def test_unstable_curve_through_branch_two(dyadic):
    c = unstable_curve(dyadic, (2,), 1)
    assert np.allclose(c.ordinate, 0.25, atol=1e-15) and np.all(c.slopes == 0.0)


def test_shear_free_unstable_curves_are_horizontal(pert_geom):
    for w in [(1, 3, 2), (4, 4), (2, 1, 1, 5)]:
        c = unstable_curve(pert_geom, w, len(w), seed_y=0.37)
        assert np.ptp(c.ordinate) < 1e-15 and np.all(c.slopes == 0.0)


def test_unstable_curve_depth_validation(dyadic):
    with pytest.raises(InvalidArgument):
        unstable_curve(dyadic, (1, 2), 3)


def test_unstable_curve_stays_in_strip(pert_shear):
    w = (3, 1, 2, 2)
    c = unstable_curve(pert_shear, w, 4, seed_y=0.6)
    s = build_strip(pert_shear, w)
    assert np.all(c.ordinate >= s.bottom - 1e-12) and np.all(c.ordinate <= s.top + 1e-12)
    assert c.max_slope <= pert_shear.alpha


def test_graph_transform_contracts(pert_shear):
    w = (2, 1, 3, 1, 2, 1, 1, 2, 3, 1)
    curves = [unstable_curve(pert_shear, w, d, seed_y=0.9).ordinate for d in range(1, 11)]
    dist = [np.max(np.abs(b - a)) for a, b in zip(curves, curves[1:])]
    rate = 1 / pert_shear.K0 ** 2 + pert_shear.alpha ** 2
    for a, b in zip(dist, dist[1:]):
        assert b <= rate * a + 1e-15


@pytest.mark.parametrize("n", [2, 5, 9])
def test_stable_curves_converge_to_left_edge(dyadic, n):
    c = stable_curve(dyadic, (1,) * n)
    assert np.all(c.ordinate <= 2.0 ** -n) and np.all(c.slopes == 0.0)


def test_sheared_stable_curve_is_curved_with_bounded_slope(pert_shear):
    c = stable_curve(pert_shear, (1, 2, 1))
    assert np.ptp(c.slopes) > 0 and c.max_slope <= pert_shear.alpha


def test_slope_gaps_vanish_without_shear(pert_geom):
    r = build_mixed(pert_geom, (1, 2), (1,))
    assert slope_field_gap(pert_geom, r, 8, seeds="horizontal").gap == 0.0


def test_slope_gap_needs_negative_word(dyadic):
    with pytest.raises(InvalidArgument):
        slope_field_gap(dyadic, build_mixed(dyadic, (), (1,)), 4)


def test_slope_gap_decay_sheared(pert_shear):
    gaps = gap_sequence(pert_shear, 6, samples=16)
    fit = fit_decay(range(1, 7), gaps)
    assert fit.theta0 < 1 and fit.residual < 0.1
    # recursion structure: each gap is controlled by the previous one
    for m in range(5):
        assert gaps[m + 1] <= max(pert_shear.K0 ** -(m + 1), fit.theta0 * gaps[m]) * 1.5


def test_variation_dyadic_is_zero(dyadic):
    assert np.all(variation_sequence(dyadic, 4, samples=16) == 0.0)


def test_variation_on_branches_geometric(pert_geom):
    for i in range(1, 7):
        assert variation_log_Du(pert_geom, build_mixed(pert_geom, (), (i,)), 64) < 0.25


def test_variation_decay_sheared(pert_shear):
    v = variation_sequence(pert_shear, 6, samples=64)
    fit = fit_decay(range(1, 7), v)
    assert fit.theta0 < 1 and fit.residual < 0.1
    assert np.all(v <= fit.c0 * fit.theta0 ** np.arange(1, 7) * 1.25)


def test_crossing_is_unique_and_inside(pert_shear):
    r = build_mixed(pert_shear, (2, 1), (1, 3))
    from hypershift._curves import cross
    u = unstable_curve(pert_shear, (2, 1), 2, seed_y=0.4).ordinate
    x, y = cross(u, stable_curve(pert_shear, (1, 3)).ordinate)
    assert r.contains(x, y)


def test_ratio_suite_dyadic(dyadic):
    r = bounded_ratio_suite(dyadic, 3, samples=8)
    assert all(v == pytest.approx(1.0, abs=1e-12) for v in r.as_dict().values())


def test_ratio_suite_geometric(pert_geom):
    r = bounded_ratio_suite(pert_geom, 3, samples=8)
    assert all(v <= math.exp(0.25) for v in r.as_dict().values())


def test_ratio_suite_constant_eps_is_flat_in_branch(pert_const):
    # x -> t + eps t (1 - t) has the same derivative range on every branch after rescaling
    r = bounded_ratio_suite(pert_const, 2, samples=8)
    d = np.array(r.per_branch["derivative"])
    assert np.allclose(d, 1.1 / 0.9, rtol=1e-12)


def test_ratio_suite_depth_validation(dyadic):
    with pytest.raises(InvalidArgument):
        bounded_ratio_suite(dyadic, 7)


def test_cylinder_sections_dyadic(dyadic):
    assert cylinder_sections(dyadic, [[1], [3]]).tolist() == [0.5, 0.125]
    assert cylinder_sections(dyadic, [[2, 1]]).tolist() == [0.125]


def test_cylinder_sections_sum_to_branch(pert_shear):
    whole = cylinder_sections(pert_shear, [[2]])[0]
    parts = cylinder_sections(pert_shear, [[2, j] for j in range(1, 21)]).sum()
    assert parts == pytest.approx(whole * (1 - 2.0 ** -20), rel=1e-4)


def test_perturbed_families_are_distinct():
    a = make_perturbed_family(6, 0.1, "geometric", 0.1)
    b = make_perturbed_family(6, 0.1, "geometric", 0.1)
    assert a is not b and reference_unstable(a).max_slope == reference_unstable(b).max_slope
