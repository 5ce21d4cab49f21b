import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smalimb import _kernels
from smalimb.errors import IntegrationDivergedError, InvalidArgumentError
from smalimb.manipulator import static_equilibrium, tip_bend_angle
from smalimb.simcore import (
    CalibrationDataset,
    LimbParams,
    PIGains,
    SimConfig,
    ambient_state,
    beam_theta_distribution,
    beam_weights,
    discrete_step,
    generate_calibration_dataset,
    phi_from_sensor,
    pi_controller_step,
    rollout,
    state_derivative,
    theta_from_phi_cc,
    wire_temperatures,
)
from smalimb.thermal import simulate_thermal

from oracles import thermal_piecewise


def random_state(limb, rng):
    x = ambient_state(limb, theta=rng.normal(scale=0.3, size=limb.n))
    x[limb.n:limb.n + 2] += rng.uniform(0, 40, 2)
    x[limb.n + 2:] = rng.normal(scale=0.5, size=limb.n + 2)
    return x


def test_kernel_matches_reference_rhs(limb, rng):
    links, scal = limb.kernel_args
    for _ in range(5):
        x, u = random_state(limb, rng), rng.uniform(0, 1, 2)
        np.testing.assert_allclose(_kernels.full_rhs(x, u, links, scal), state_derivative(x, u, limb),
                                   rtol=1e-11, atol=1e-12)


def test_kernel_accepts_complex_state(limb, rng):
    links, scal = limb.kernel_args
    x, u = random_state(limb, rng), rng.uniform(0, 1, 2)
    out = _kernels.full_rhs(x.astype(complex), u.astype(complex), links, scal)
    np.testing.assert_allclose(out.real, state_derivative(x, u, limb), rtol=1e-11, atol=1e-12)
    assert np.all(out.imag == 0)


def test_ambient_rest_is_fixed_point(limb, sim):
    x = ambient_state(limb)
    np.testing.assert_array_equal(state_derivative(x, np.zeros(2), limb), 0.0)
    np.testing.assert_allclose(discrete_step(x, np.zeros(2), sim, limb), x, atol=1e-12)
    r = rollout(x, np.zeros((50, 2)), sim, limb)
    assert np.max(np.abs(r.phi)) == 0.0


def test_right_actuator_bends_positive(limb, sim):
    r = rollout(ambient_state(limb), np.tile([0.0, 0.6], (30, 1)), sim, limb)
    n = limb.n
    assert r.x[-1, 2 * n + 3] > 0  # V̇_r
    acc = [state_derivative(x, [0.0, 0.6], limb)[n + 2:2 * n + 2].mean() for x in r.x[1:10]]
    assert np.mean(acc) > 0 and r.phi[-1] > 0


def test_thermal_block_matches_closed_form(limb, sim, rng):
    D = rng.uniform(0, 1, (80, 2))
    r = rollout(ambient_state(limb), D, sim, limb)
    for j, side in enumerate((limb.left, limb.right)):
        _, V = thermal_piecewise(D[:, j], sim.dt_sample, side.a1, side.a2, side.a3, side.T0)
        np.testing.assert_allclose(r.x[:, limb.n + j], V, atol=1e-8)
        T_sim, _ = simulate_thermal(D[:, j], sim.dt_sample, side)
        np.testing.assert_allclose(wire_temperatures(r.x, limb)[:, j], T_sim, atol=1e-8)


def test_rk4_convergence_order(limb, rng):
    x0 = ambient_state(limb, theta=theta_from_phi_cc(math.radians(20), limb.n))
    u = np.array([0.3, 0.7])
    ref = discrete_step(x0, u, SimConfig(0.1 / 640, 0.1), limb)
    errs = [np.max(np.abs(discrete_step(x0, u, SimConfig(0.1 / m, 0.1), limb) - ref)) for m in (10, 20, 40)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders >= 3.8)


def test_symmetric_heating_keeps_limb_straight(limb, sim):
    sym = LimbParams(manip=limb.manip, left=limb.right, right=limb.right)
    r = rollout(ambient_state(sym), np.full((200, 2), 0.5), sim, sym)
    assert np.max(np.abs(r.phi)) <= 1e-9
    assert wire_temperatures(r.x[-1], sym).min() > 60


def test_constant_duty_settles_to_algebraic_equilibrium(limb, sim):
    D = 0.1
    side = limb.right
    T_ss = side.T0 + side.a2 * D / -side.a1
    f = side.beta * (T_ss - side.T0) * np.ones(limb.n)
    phi_ss = tip_bend_angle(static_equilibrium(limb.manip, f_act=f), limb.manip)
    steps = int(round(5 * 20.0 / sim.dt_sample))
    r = rollout(ambient_state(limb), np.tile([0.0, D], (steps, 1)), sim, limb)
    assert abs(math.degrees(r.phi[-1] - phi_ss)) <= 0.1


def test_unstable_step_reports_divergence(limb):
    # a single RK4 step per 0.1 s is outside the stability region of the fast mode
    with pytest.raises(IntegrationDivergedError):
        rollout(ambient_state(limb, theta=np.full(limb.n, 0.1)), np.zeros((400, 2)), SimConfig(0.1, 0.1), limb)


def test_sim_config_validation():
    with pytest.raises(InvalidArgumentError):
        SimConfig(0.03, 0.1)
    with pytest.raises(InvalidArgumentError):
        SimConfig(0.2, 0.1)
    assert SimConfig(0.01, 0.1).substeps == 10


def test_limb_params_roundtrip(limb):
    assert LimbParams.from_dict(limb.to_dict()) == limb
    with pytest.raises(InvalidArgumentError):
        LimbParams(limb.manip, limb.left, limb.right.replace(T0=20.0))


# ------------------------------------------------------------- curvature maps

def test_constant_curvature_examples():
    np.testing.assert_array_equal(theta_from_phi_cc(0.0, 5), 0.0)
    np.testing.assert_allclose(theta_from_phi_cc(math.radians(20), 3), math.radians(10) * np.ones(3))
    assert phi_from_sensor(0.0) == 0.0
    assert phi_from_sensor(math.radians(90)) == pytest.approx(math.radians(45))
    assert phi_from_sensor(math.radians(-30)) == pytest.approx(math.radians(-15))


@given(phi_deg=st.floats(-45.0, 45.0).filter(lambda v: abs(v) > 1e-3))
def test_constant_curvature_round_trip(phi_deg, limb):
    phi = math.radians(phi_deg)
    back = tip_bend_angle(theta_from_phi_cc(phi, limb.n), limb.manip)
    assert back == pytest.approx(phi, rel=0.02)


def test_beam_weights_examples():
    np.testing.assert_array_equal(beam_weights(1), [1.0])
    np.testing.assert_allclose(beam_weights(3), np.array([9.0, 4.0, 1.0]) / 5.0)
    phi = math.radians(10)
    np.testing.assert_allclose(beam_theta_distribution(phi, 1.0, 3), phi * np.array([1.8, 0.8, 0.2]))
    np.testing.assert_allclose(beam_theta_distribution(phi, 1.22, 3), 1.22 * beam_theta_distribution(phi, 1.0, 3))
    with pytest.raises(InvalidArgumentError):
        beam_weights(0)


@given(st.integers(2, 30))
def test_beam_profile_decreasing(n):
    assert np.all(np.diff(beam_weights(n)) < 0)


# ------------------------------------------------------------------- PI law

def test_pi_zero_error_gives_zero_duty():
    g = PIGains()
    for mode in ("right-only", "left-only"):
        u, integ = pi_controller_step(0.3, 0.3, g, 0.0, mode, 0.1)
        np.testing.assert_array_equal(u, 0.0)
        assert integ == 0.0
    with pytest.raises(InvalidArgumentError):
        pi_controller_step(0.0, 0.1, g, 0.0, "sideways", 0.1)


def test_pi_saturates_monotonically():
    g = PIGains()
    integ, last = 0.0, []
    for _ in range(300):
        u, integ = pi_controller_step(0.0, 0.2, g, integ, "right-only", 0.1)
        assert u[0] == 0.0
        last.append(u[1])
    assert np.all(np.diff(last) >= 0) and last[-1] == 1.0
    assert abs(integ) <= g.integ_limit


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-10, 10), st.sampled_from(["left-only", "right-only", "both"]))
def test_pi_output_in_unit_box(phi, ref, integ, mode):
    u, new = pi_controller_step(phi, ref, PIGains(), integ, mode, 0.1)
    assert np.all((u >= 0) & (u <= 1)) and abs(new) <= PIGains().integ_limit


@pytest.mark.parametrize("kind,target", [("right", 30.0), ("left", -30.0), ("mixed", 30.0)])
def test_closed_loop_settles(limb, sim, kind, target):
    ds = generate_calibration_dataset(kind, [math.radians(target)], 60.0, sim, limb)
    assert abs(math.degrees(ds.phi[-1] - ds.phi_eq[-1])) <= 1.0


# ---------------------------------------------------------------- datasets

def test_single_sided_dataset_properties(limb, sim):
    ds = generate_calibration_dataset("right", [math.radians(20)], 200.0, sim, limb)
    assert np.all(ds.D_l == 0)
    Vdot = np.gradient(ds.V_r, ds.dt)
    assert abs(Vdot[-5:]).max() < 1e-3
    n = limb.n
    x_end = rollout(ambient_state(limb), ds.D_seq, sim, limb).x[-1]
    assert abs(x_end[n + 1] - wire_temperatures(x_end, limb)[1]) < 0.1


def test_dataset_generation_is_reproducible(limb, sim):
    args = ("mixed", [0.3, -0.2], 10.0, sim, limb)
    a = generate_calibration_dataset(*args, seed=5, noise_phi=0.01, noise_V=0.1)
    b = generate_calibration_dataset(*args, seed=5, noise_phi=0.01, noise_V=0.1)
    for col in ("phi", "V_l", "V_r", "D_l", "D_r"):
        np.testing.assert_array_equal(getattr(a, col), getattr(b, col))


def test_replaying_logged_inputs_reproduces_run(limb, sim):
    ds = generate_calibration_dataset("mixed", [0.3, -0.2], 10.0, sim, limb)
    r = rollout(ambient_state(limb), ds.D_seq[:-1], sim, limb)
    np.testing.assert_array_equal(r.phi, ds.phi)


def test_dataset_rejects_bad_setpoints(limb, sim):
    with pytest.raises(InvalidArgumentError):
        generate_calibration_dataset("right", [-0.1], 10.0, sim, limb)
    with pytest.raises(InvalidArgumentError):
        generate_calibration_dataset("left", [math.radians(-50)], 10.0, sim, limb)
    with pytest.raises(InvalidArgumentError):
        generate_calibration_dataset("up", [0.1], 10.0, sim, limb)


def test_dataset_csv_fixpoint(tmp_path, limb, sim):
    ds = generate_calibration_dataset("left", [-0.3], 5.0, sim, limb, noise_phi=1e-3, noise_V=0.05)
    ds.write_csv(tmp_path / "a.csv")
    back = CalibrationDataset.read_csv(tmp_path / "a.csv", kind="left")
    back.write_csv(tmp_path / "b.csv")
    again = CalibrationDataset.read_csv(tmp_path / "b.csv", kind="left")
    for col in ("t", "phi", "phi_eq", "V_l", "V_r", "D_l", "D_r"):
        np.testing.assert_array_equal(getattr(again, col), getattr(back, col))
    again.write_csv(tmp_path / "c.csv")
    assert (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()
    np.testing.assert_allclose(back.phi, ds.phi, rtol=1e-13)
    (tmp_path / "bad.csv").write_text("t,phi\n0,1\n")
    with pytest.raises(InvalidArgumentError):
        CalibrationDataset.read_csv(tmp_path / "bad.csv")


def test_kernels_do_not_read_output_buffers(limb):
    # output buffers may hold arbitrary bytes, including inf/NaN patterns
    n = limb.n
    q = np.cumsum(np.full(n, 0.2))
    c, s, w = np.cos(q), np.sin(q), np.linspace(0.1, 0.5, n)
    links, scal = LimbParams(manip=limb.manip.replace(gravity_on=True)).kernel_args
    tau, fg = np.full(n, np.nan), np.full(n, np.inf)
    _kernels._rnea(c, s, w, np.ones(n), links, tau)
    _kernels._gravity(c, s, links, scal, fg)
    assert np.all(np.isfinite(tau)) and np.all(np.isfinite(fg))
