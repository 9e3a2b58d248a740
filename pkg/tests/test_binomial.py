import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_stopping_rules
from sdcf.binomial import (
    Lattice,
    MadCalibration,
    backward_induct,
    build_profit_lattice,
    jarrow_rudd_factors,
    mad_calibrate,
    mad_value_lattice,
    path_present_values,
    sdcf_value_lattices,
    value_mad,
    value_of_delay,
    value_sdcf,
)
from sdcf.discounting import Compounding, RatePair
from sdcf.errors import ConsistencyError, DomainError


def test_lattice_shape_is_checked():
    with pytest.raises(DomainError):
        Lattice([np.array([1.0]), np.array([1.0, 2.0, 3.0])])


def test_jarrow_rudd_factors():
    u, d = jarrow_rudd_factors(0.2, 0.3)
    assert u == pytest.approx(1.5762, abs=1e-4)
    assert d == pytest.approx(0.8651, abs=1e-4)
    assert (math.log(u) + math.log(d)) / 2 == pytest.approx(0.2 - 0.5 * 0.09)


def test_deterministic_profit_lattice():
    lat = build_profit_lattice(2.0, 0.1, 0.0, 3)
    for t, level in enumerate(lat.levels):
        assert np.allclose(level, 2.0 * math.exp(0.1 * t))


def test_profit_lattice_recombines():
    lat = build_profit_lattice(1.0, 0.2, 0.3, 4)
    u, d = jarrow_rudd_factors(0.2, 0.3)
    assert lat[2, 1] == pytest.approx(u * d)
    assert lat[4, 4] == pytest.approx(u**4)


def test_worked_example_sdcf():
    res = value_sdcf(1.0, 0.2, 0.3, 0.10, 5, q0=7.0)
    assert res.r_q == pytest.approx(0.1306, abs=1e-4)
    assert res.NPV0 == pytest.approx(0.54, abs=0.005)
    assert res.V0 == pytest.approx(0.54, abs=0.01)
    assert res.v0 == 0.0


def test_sdcf_terminal_column_is_zero():
    res = value_sdcf(1.0, 0.2, 0.3, 0.10, 5, q0=7.0)
    assert np.all(res.lattices["npv0"].levels[-1] == 0.0)


def test_sdcf_requires_discrete_rates():
    lat = build_profit_lattice(1.0, 0.2, 0.3, 3)
    with pytest.raises(DomainError):
        sdcf_value_lattices(lat, 0.2, RatePair(0.1, 0.1))


def test_sdcf_needs_exactly_one_market_input():
    with pytest.raises(DomainError):
        value_sdcf(1.0, 0.2, 0.3, 0.1, 5)
    with pytest.raises(DomainError):
        value_sdcf(1.0, 0.2, 0.3, 0.1, 5, q0=7.0, r_q=0.1)


@settings(max_examples=40, deadline=None)
@given(
    x0=st.floats(0.1, 10),
    mu=st.floats(-0.2, 0.4),
    sigma=st.floats(0, 0.8),
    r=st.floats(0.0, 0.5),
    T=st.integers(1, 6),
)
def test_sdcf_agreement_nullity(x0, mu, sigma, r, T):
    res = value_sdcf(x0, mu, sigma, r, T, r_q=r)
    assert res.V0 == 0.0 and res.v0 == 0.0
    assert all(np.all(level == 0.0) for level in res.lattices["npv0"].levels)


def test_backward_induct_all_zero():
    _, V0 = backward_induct(Lattice([np.zeros(t + 1) for t in range(4)]))
    assert V0 == 0.0


def test_backward_induct_two_period_by_hand():
    payoff = Lattice([np.array([1.0]), np.array([0.5, 2.0]), np.array([0.0, 1.0, 4.0])])
    _, V0 = backward_induct(payoff)
    # up node: max(2, (1+4)/2) = 2.5; down node: max(0.5, 0.5) = 0.5; root: max(1, 1.5)
    assert V0 == pytest.approx(1.5)


@pytest.mark.parametrize("T", [1, 2, 3])
def test_backward_induct_matches_enumeration(T):
    rng = np.random.default_rng(T)
    for _ in range(5):
        payoff = Lattice([np.maximum(rng.normal(size=t + 1), 0.0) for t in range(T + 1)])
        _, V0 = backward_induct(payoff)
        assert abs(V0 - enumerate_stopping_rules(payoff)) <= 1e-12


def test_sdcf_lattice_matches_enumeration():
    res = value_sdcf(1.0, 0.2, 0.3, 0.18, 3, r_q=0.10)
    assert abs(res.V0 - enumerate_stopping_rules(res.lattices["payoff"])) <= 1e-12


def test_dominance_over_fixed_dates():
    res = value_sdcf(1.0, 0.2, 0.5, 0.18, 5, r_q=0.10)
    payoff = res.lattices["payoff"]
    for t in range(payoff.steps + 1):
        weights = np.array([math.comb(t, j) for j in range(t + 1)]) / 2**t
        assert res.V0 >= float(weights @ payoff.levels[t]) - 1e-12


def test_value_of_delay():
    assert value_of_delay(1.5, 0.5) == 1.0
    with pytest.raises(ConsistencyError):
        value_of_delay(0.4, 0.5)


def test_profit_path_present_values_discrete():
    # first printed profit path of the worked example
    x = np.array([[1.0, 0.91, 0.95, 0.99, 1.60, 2.38]])
    p = path_present_values(x, 0.10, Compounding.DISCRETE)
    assert p[0, 0] == pytest.approx(5.92, abs=0.01)
    assert p[0, 1] == pytest.approx(5.42, abs=0.01)
    cont = path_present_values(x, 0.10, Compounding.CONTINUOUS)
    assert cont[0, 0] == pytest.approx(5.85, abs=0.01)


def test_mad_calibration_without_volatility():
    cal = mad_calibrate(1.0, 0.2, 0.0, 0.1, 5, 1000, seed=1)
    assert np.all(np.abs(cal.s) < 1e-12)


def test_mad_calibration_warns_when_undersized():
    with pytest.warns(UserWarning, match="undersized"):
        mad_calibrate(1.0, 0.2, 0.3, 0.1, 5, 500, seed=1)


def test_mad_calibration_is_seeded():
    a = mad_calibrate(1.0, 0.2, 0.3, 0.1, 5, 5000, seed=3)
    b = mad_calibrate(1.0, 0.2, 0.3, 0.1, 5, 5000, seed=3, workers=4)
    assert np.array_equal(a.s, b.s) and np.array_equal(a.delta, b.delta)


def test_mad_lattice_constant_without_moves():
    cal = MadCalibration(s=np.zeros(3), delta=np.zeros(3), n_paths=0, seed=0)
    lat = mad_value_lattice(7.0, cal)
    assert all(np.all(level == 7.0) for level in lat.levels)


def test_mad_lattice_one_step():
    cal = MadCalibration(s=np.array([0.4]), delta=np.array([0.1]), n_paths=0, seed=0)
    lat = mad_value_lattice(7.0, cal)
    up, down = lat[1, 1], lat[1, 0]
    assert up * down == pytest.approx((7.0 * 0.9) ** 2 * math.exp(-0.16))
    assert up / down == pytest.approx(math.exp(0.8))


def test_mad_worked_example_is_sane():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = value_mad(1.0, 0.2, 0.3, 0.10, 5, q0=7.0, n_paths=10_000, seed=0)
    assert res.P0 == pytest.approx(0.54, abs=0.005)
    assert res.V0 >= res.P0
    assert res.calibration.delta[0] == pytest.approx(0.13, abs=0.005)
    assert res.lattices["project"].root == pytest.approx(7.5406, abs=1e-4)


def test_mad_rejects_nonpositive_root():
    cal = MadCalibration(s=np.zeros(1), delta=np.zeros(1), n_paths=0, seed=0)
    with pytest.raises(DomainError):
        mad_value_lattice(0.0, cal)
