import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smalimb.errors import InvalidArgumentError
from smalimb.thermal import (
    ThermalParams,
    actuation_force,
    measured_temp_derivative,
    simulate_thermal,
    wire_temp_derivative,
    wire_temp_from_measurement,
    zoh_discretize,
)

from oracles import thermal_closed_form, thermal_piecewise

P = ThermalParams(a1=-0.05, a2=6.0, a3=0.5, beta=0.004, T0=25.0)
duties = arrays(float, st.integers(1, 80), elements=st.floats(0.0, 1.0))


def test_wire_rate_trivial_cases():
    assert wire_temp_derivative(P.T0, 0.0, P) == 0.0
    assert wire_temp_derivative(P.steady_state_max, 1.0, P) == pytest.approx(0.0, abs=1e-12)
    assert P.steady_state_max == pytest.approx(145.0)
    with pytest.raises(InvalidArgumentError):
        wire_temp_derivative(30.0, 1.2, P)


def test_lag_rate_and_inversion_trivial_cases():
    assert measured_temp_derivative(40.0, 40.0, P) == 0.0
    assert wire_temp_from_measurement(40.0, 0.0, P) == 40.0
    # relaxation convention: V̇ = a3 (T - V) inverts to T = V + V̇/a3
    assert wire_temp_from_measurement(50.0, 2.0, P) == pytest.approx(54.0)


def test_force_map_examples():
    p = ThermalParams(beta=0.001)
    np.testing.assert_array_equal(actuation_force(25.0, 25.0, p, p, 4), 0.0)
    np.testing.assert_array_equal(actuation_force(60.0, 60.0, p, p, 4), 0.0)
    np.testing.assert_allclose(actuation_force(35.0, 65.0, p, p, 3), 0.03 * np.ones(3), rtol=1e-14)


@given(st.floats(0, 150), st.floats(0, 150))
def test_force_slope_equals_beta(Tl, Tr):
    pl, pr = ThermalParams(beta=0.003), ThermalParams(beta=0.005)
    h = 1.0
    dr = actuation_force(Tl, Tr + h, pl, pr, 2) - actuation_force(Tl, Tr, pl, pr, 2)
    dl = actuation_force(Tl + h, Tr, pl, pr, 2) - actuation_force(Tl, Tr, pl, pr, 2)
    np.testing.assert_allclose(dr, pr.beta, rtol=1e-9)
    np.testing.assert_allclose(dl, -pl.beta, rtol=1e-9)


@given(duties, st.floats(0.01, 0.5))
def test_sampled_response_matches_closed_form(D, dt):
    T, V = simulate_thermal(D, dt, P)
    T_ref, V_ref = thermal_piecewise(D, dt, P.a1, P.a2, P.a3, P.T0)
    np.testing.assert_allclose(T, T_ref, rtol=0, atol=1e-8)
    np.testing.assert_allclose(V, V_ref, rtol=0, atol=1e-8)


def test_sampled_response_from_offset_state():
    D = np.full(50, 0.3)
    T, V = simulate_thermal(D, 0.1, P, T_init=70.0, V_init=40.0)
    T_ref, V_ref = thermal_piecewise(D, 0.1, P.a1, P.a2, P.a3, P.T0, 70.0, 40.0)
    np.testing.assert_allclose(np.c_[T, V], np.c_[T_ref, V_ref], atol=1e-9)


def test_step_response_and_lag_half_life():
    t = 7.3
    T, _ = thermal_closed_form(t, 0.4, P.a1, P.a2, P.a3, P.T0, P.T0, P.T0)
    assert T == pytest.approx(P.T0 + 0.4 * P.a2 / -P.a1 * (1 - np.exp(P.a1 * t)), abs=1e-12)
    # constant wire temperature: V closes half the gap in ln2/a3
    _, V = simulate_thermal(np.zeros(1), np.log(2) / P.a3, P.replace(a1=-1e-12), T_init=65.0, V_init=25.0)
    assert V[1] == pytest.approx(45.0, abs=1e-9)


def test_fast_lag_tracks_wire():
    fast = P.replace(a3=50.0)
    D = np.r_[np.ones(100), np.zeros(100)]
    T, V = simulate_thermal(D, 0.05, fast)
    settled = np.arange(T.size) * 0.05 >= 5 / fast.a3
    assert np.all(np.abs(V - T)[settled] <= 0.01 * np.abs(T - P.T0)[settled].max())


def test_round_trip_recovers_wire_temperature():
    D = np.r_[np.full(40, 0.8), np.full(40, 0.1), np.full(40, 0.5)]
    T, V = simulate_thermal(D, 0.1, P)
    Vdot = measured_temp_derivative(V, T, P)
    np.testing.assert_allclose(wire_temp_from_measurement(V, Vdot, P), T, atol=1e-10)


@given(duties, duties)
def test_superposition(D1, D2):
    m = min(D1.size, D2.size)
    D1, D2 = D1[:m] / 2, D2[:m] / 2
    # forced responses add once the homogeneous part is removed
    free = np.array(simulate_thermal(np.zeros(m), 0.1, P, 60.0, 50.0))
    both = np.array(simulate_thermal(D1 + D2, 0.1, P, 60.0, 50.0)) - free
    one = np.array(simulate_thermal(D1, 0.1, P)) - P.T0
    two = np.array(simulate_thermal(D2, 0.1, P)) - P.T0
    np.testing.assert_allclose(both, one + two, atol=1e-9)


@given(duties)
def test_wire_temperature_stays_in_box(D):
    T, V = simulate_thermal(D, 0.5, P)
    assert np.all(T >= P.T0 - 1e-12) and np.all(T <= P.steady_state_max + 1e-9)
    assert np.all(V >= P.T0 - 1e-12) and np.all(V <= P.steady_state_max + 1e-9)


def test_zoh_matches_closed_form():
    Ad, Bd = zoh_discretize(P, 0.2)
    T, V = thermal_closed_form(0.2, 1.0, P.a1, P.a2, P.a3, P.T0, P.T0 + 3.0, P.T0 + 1.0)
    np.testing.assert_allclose(Ad @ [3.0, 1.0] + Bd, [T - P.T0, V - P.T0], atol=1e-12)


def test_param_validation():
    for bad in (dict(a1=0.1), dict(a2=-1.0), dict(a3=0.0), dict(beta=0.0), dict(T0=np.nan)):
        with pytest.raises(InvalidArgumentError):
            ThermalParams(**bad)
