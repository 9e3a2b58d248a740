import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lattice_paths, matched_npv_lattice
from sdcf.binomial import backward_induct, sample_lattice_paths
from sdcf.discounting import Horizon, RatePair, TwoFactor, npv0_coefficients, present_value
from sdcf.errors import DomainError
from sdcf.lsm import (
    QuadraticFit,
    RegressionFit,
    exercise_boundary,
    exercise_probability,
    lsm_value,
    npv_paths,
    perfect_foresight_bound,
    quadratic_nonnegative_roots,
    simulate_paths,
    value_two_factor,
)
from sdcf.studies import base_case

H5 = Horizon(5, 5)


def test_deterministic_paths():
    spec = TwoFactor(2.0, 3.0, 0.1, -0.05)
    paths = simulate_paths(spec, Horizon(2, 4), 3, seed=0)
    expected1 = 2.0 * np.exp(0.1 * paths.times)
    assert np.allclose(paths.x1, expected1, rtol=1e-14)
    assert np.allclose(paths.x2, 3.0 * np.exp(-0.05 * paths.times), rtol=1e-14)


def test_perfect_correlation_equal_parameters_gives_identical_streams():
    spec = TwoFactor(5, 5, 0.3, 0.3, 0.3, 0.3, 1.0, 1.0)
    paths = simulate_paths(spec, H5, 1000, seed=4)
    assert np.array_equal(paths.x1, paths.x2)


def test_paths_are_positive():
    spec = TwoFactor(5, 5, 0.3, 0.3, 0.9, 0.9, 0.5, -0.5)
    paths = simulate_paths(spec, Horizon(5, 20), 2000, seed=1)
    assert np.all(paths.x1 > 0) and np.all(paths.x2 > 0)


def test_log_return_correlation():
    spec = TwoFactor(1, 1, 0.0, 0.0, 0.3, 0.2, 0.8, -0.5)
    paths = simulate_paths(spec, Horizon(1, 1), 100_000, seed=2)
    r1 = np.diff(np.log(paths.x1), axis=1).ravel()
    r2 = np.diff(np.log(paths.x2), axis=1).ravel()
    assert np.corrcoef(r1, r2)[0, 1] == pytest.approx(-0.4, abs=0.01)


def test_log_return_moments():
    spec = TwoFactor(1, 1, 0.2, 0.0, 0.3, 0.0)
    paths = simulate_paths(spec, Horizon(1, 1), 100_000, seed=3)
    r = np.log(paths.x1[:, 1])
    assert r.mean() == pytest.approx(0.2 - 0.045, abs=0.003)
    assert r.std() == pytest.approx(0.3, abs=0.003)


def test_simulate_rejects_tiny_path_count():
    with pytest.raises(DomainError):
        simulate_paths(TwoFactor(1, 1, 0, 0), H5, 1, seed=0)


def test_npv_paths_base_case_is_zero():
    sc = base_case()
    paths = simulate_paths(sc.spec, sc.horizon, 500, seed=9)
    assert np.all(npv_paths(paths, RatePair(0.28, 0.30), 0.3, 0.3)[:, 0] == 0.0)
    assert np.all(npv_paths(paths, sc.rates, 0.3, 0.3) == 0.0)


def test_npv_paths_match_composition():
    spec = TwoFactor(4.0, 3.0, 0.1, 0.05, 0.2, 0.1, 0.3, 0.3)
    rates = RatePair(0.12, 0.2)
    paths = simulate_paths(spec, H5, 4, seed=5)
    npv = npv_paths(paths, rates, 0.1, 0.05)
    n, t = 2, 3
    levels = (paths.x1[n, t], paths.x2[n, t])
    p = present_value(spec, rates.r_p, "continuous", float(t), H5, levels)
    q = present_value(spec, rates.r_q, "continuous", float(t), H5, levels)
    assert npv[n, t] == pytest.approx((p - q) * math.exp(-rates.r_p * t), rel=1e-12)


def test_base_case_values_are_zero():
    sc = base_case()
    res = value_two_factor(sc.spec, sc.rates, sc.horizon, 5000, seed=1)
    assert res.V0 == 0.0 and res.v0 == 0.0 and res.NPV0 == 0.0
    assert np.all(res.phi == 0.0)


def test_declining_paths_exercise_immediately():
    npv = np.tile(np.array([3.0, 2.0, 1.0, 0.5]), (50, 1))
    res = lsm_value(npv)
    assert res.V0 == 3.0 and res.v0 == 0.0
    assert np.all(res.phi == 1.0)


def test_never_in_the_money():
    res = lsm_value(-np.ones((40, 4)))
    assert res.V0 == 0.0 and np.all(res.phi == 0.0)


def test_degenerate_regression_flagged():
    npv = np.zeros((100, 4))
    npv[:5, 1] = 1.0
    res = lsm_value(npv)
    assert res.regression.degenerate[1]
    assert res.paths_used[1] == 5
    assert res.V0 == pytest.approx(0.05)


def test_needs_a_step():
    with pytest.raises(DomainError):
        lsm_value(np.zeros((10, 1)))


@pytest.mark.parametrize("seed", [0, 1])
def test_bounds_hold(seed):
    spec = TwoFactor(5, 4.6, 0.3, 0.3, 0.4, 0.3, 0.5, 0.5)
    paths = simulate_paths(spec, H5, 10_000, seed)
    npv = npv_paths(paths, RatePair(0.22, 0.3), 0.3, 0.3)
    res = lsm_value(npv, paths.times)
    assert res.V0 >= res.P0 >= 0
    assert res.V0 <= perfect_foresight_bound(npv)
    static = np.maximum(npv, 0).mean(axis=0).max()
    assert res.V0 >= static - 3 * res.se
    assert np.all(np.diff(res.phi) >= 0) and 0 <= res.phi[-1] <= 1


def test_lsm_matches_lattice_backward_induction():
    rates = RatePair(0.2, 0.3)
    lattice = matched_npv_lattice(5.0, 5.0, 0.3, 0.3, 0.3, rates, 3)
    payoff = lattice.map(lambda v: np.maximum(v, 0.0))
    _, exact = backward_induct(payoff)
    ups = sample_lattice_paths(3, 100_000, seed=7)
    res = lsm_value(lattice_paths(lattice, ups), np.arange(4.0))
    assert abs(res.V0 - exact) <= 3 * res.se


def test_filters_agree_on_lattice():
    rates = RatePair(0.35, 0.3)
    lattice = matched_npv_lattice(5.0, 5.0, 0.3, 0.3, 0.4, rates, 3)
    paths = lattice_paths(lattice, sample_lattice_paths(3, 20_000, seed=8))
    a, b = lsm_value(paths, filter_rule="paper"), lsm_value(paths, filter_rule="itm")
    assert a.V0 == pytest.approx(b.V0, abs=3 * a.se)


def test_quadratic_roots_worked_example():
    # 2 - x - x^2 = 0 has nonnegative root 1
    assert quadratic_nonnegative_roots(2.0, -1.0, -1.0) == pytest.approx([1.0], abs=1e-12)


def test_linear_boundary():
    fit = RegressionFit([QuadraticFit(0.6, 0.4, 0.0, 50)], [50])
    b = exercise_boundary(fit, [0.0])
    assert b.lower[0] == pytest.approx(0.6 / (1 - 0.4))
    assert math.isnan(b.upper[0])
    assert b.sign_at_zero[0] == 1


def test_boundary_absent_without_real_roots():
    fit = RegressionFit([QuadraticFit(1.0, 0.0, 1.0, 50), None], [50, 3])
    b = exercise_boundary(fit, [0.0, 1.0])
    assert math.isnan(b.lower[0]) and math.isnan(b.upper[0])
    assert b.sign_at_zero[0] == 1
    assert math.isnan(b.lower[1]) and b.sign_at_zero[1] == 0


@settings(max_examples=200, deadline=None)
@given(r1=st.floats(0, 100), gap=st.floats(1e-3, 100), k=st.floats(0.01, 10), flip=st.booleans())
def test_quadratic_roots_recovered(r1, gap, k, flip):
    r2 = r1 + gap
    k = -k if flip else k
    roots = quadratic_nonnegative_roots(k * r1 * r2, -k * (r1 + r2), k)
    assert len(roots) == 2
    assert roots[0] == pytest.approx(r1, abs=1e-12 * max(1.0, r2 * r2))
    assert roots[1] == pytest.approx(r2, abs=1e-12 * max(1.0, r2 * r2))


def test_boundary_consistency():
    sc = base_case()
    paths = simulate_paths(sc.spec, sc.horizon, 10_000, seed=3)
    npv = npv_paths(paths, RatePair(0.25, 0.30), 0.3, 0.3)
    res = lsm_value(npv, paths.times)
    b = res.boundary
    checked = 0
    for t in range(1, b.times.size):
        if b.sign_at_zero[t] > 0 and not math.isnan(b.lower[t]):
            hi = b.upper[t] if not math.isnan(b.upper[t]) else np.inf
            inside = (npv[:, t] > b.lower[t]) & (npv[:, t] < hi)
            # only paths still alive at t can record a decision there
            alive = (res.exercise_step < 0) | (res.exercise_step >= t)
            assert np.all(res.exercise_flags[inside & alive, t])
            checked += int((inside & alive).sum())
    assert checked > 0


def test_exercise_probability():
    assert np.array_equal(exercise_probability(np.array([-1, -1]), 3), np.zeros(4))
    assert np.array_equal(exercise_probability(np.zeros(5, dtype=int), 2), np.ones(3))
    assert np.allclose(exercise_probability(np.array([0, 2, -1, 1]), 3), [0.25, 0.5, 0.75, 0.75])


@pytest.mark.parametrize("workers", [2, 8])
def test_worker_count_does_not_change_results(workers):
    spec = TwoFactor(5, 4.8, 0.3, 0.3, 0.3, 0.3, 0.5, 0.5)
    one = value_two_factor(spec, RatePair(0.25, 0.3), H5, 9000, seed=6, workers=1)
    many = value_two_factor(spec, RatePair(0.25, 0.3), H5, 9000, seed=6, workers=workers)
    assert one.V0 == many.V0
    assert np.array_equal(one.payoffs, many.payoffs)
    assert np.array_equal(one.exercise_step, many.exercise_step)


def test_coefficients_are_used_as_stated():
    c1, c2 = npv0_coefficients(0.3, 0.3, RatePair(0.28, 0.3), np.arange(6.0), 5.0)
    assert np.all(c1[:-1] > 0) and c1[-1] == 0.0
    assert np.array_equal(c1, c2)
