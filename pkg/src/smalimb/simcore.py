"""Combined limb + antagonistic actuator simulation and synthetic data generation."""

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import IntegrationDivergedError, InvalidArgumentError
from .manipulator import ManipulatorParams, manipulator_accel, tip_bend_angle
from .thermal import (
    ThermalParams,
    actuation_force,
    measured_temp_derivative,
    wire_temp_derivative,
    wire_temp_from_measurement,
)


@dataclass(frozen=True)
class LimbParams:
    """Everything the combined dynamics needs: chain plus left/right actuators."""

    manip: ManipulatorParams = field(default_factory=ManipulatorParams)
    left: ThermalParams = field(default_factory=ThermalParams)
    right: ThermalParams = field(default_factory=ThermalParams)

    def __post_init__(self):
        if self.left.T0 != self.right.T0:
            raise InvalidArgumentError("left and right actuators must share the ambient T0")

    @property
    def n(self):
        return self.manip.n

    @property
    def T0(self):
        return self.left.T0

    @property
    def nx(self):
        return 2 * self.manip.n + 4

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)

    @cached_property
    def kernel_args(self):
        m = self.manip
        links = np.stack([m.per_link(name) for name in
                          ("link_length", "link_mass", "link_com_offset", "link_inertia")])
        scal = np.array([
            m.k, m.sigma, float(m.gravity_on), m.g, *m.gravity_direction, self.T0,
            self.left.a1, self.left.a2, self.left.a3, self.left.beta,
            self.right.a1, self.right.a2, self.right.a3, self.right.beta,
        ], dtype=float)
        return np.ascontiguousarray(links), scal

    def to_dict(self):
        return {"manip": self.manip.to_dict(), "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(ManipulatorParams.from_dict(d["manip"]),
                   ThermalParams(**d["left"]), ThermalParams(**d["right"]))


@dataclass(frozen=True)
class SimConfig:
    dt_integration: float = 0.01
    dt_sample: float = 0.1

    def __post_init__(self):
        if not 0 < self.dt_integration <= self.dt_sample:
            raise InvalidArgumentError("need 0 < dt_integration <= dt_sample")
        ratio = self.dt_sample / self.dt_integration
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise InvalidArgumentError("dt_sample must be an integer multiple of dt_integration")

    @property
    def substeps(self):
        return int(round(self.dt_sample / self.dt_integration))


# ---------------------------------------------------------------- state layout

def pack_state(theta, V_l, V_r, theta_dot, Vdot_l, Vdot_r):
    return np.concatenate([np.atleast_1d(theta), [V_l, V_r], np.atleast_1d(theta_dot), [Vdot_l, Vdot_r]])


def unpack_state(x, n):
    """Split state(s) into (theta, V, theta_dot, V_dot); V and V_dot are (..., 2) as [l, r]."""
    x = np.asarray(x)
    return x[..., :n], x[..., n:n + 2], x[..., n + 2:2 * n + 2], x[..., 2 * n + 2:]


def ambient_state(params, theta=None):
    n = params.n
    x = np.zeros(params.nx)
    x[n:n + 2] = params.T0
    if theta is not None:
        x[:n] = theta
    return x


def wire_temperatures(x, params):
    """Wire temperatures [T_l, T_r] recovered from (V, V̇) in the state."""
    _, V, _, Vd = unpack_state(x, params.n)
    return np.stack([wire_temp_from_measurement(V[..., 0], Vd[..., 0], params.left),
                     wire_temp_from_measurement(V[..., 1], Vd[..., 1], params.right)], axis=-1)


def state_derivative(x, u, params):
    """ẋ for x = [θ, V_l, V_r, θ̇, V̇_l, V̇_r] and u = [D_l, D_r].

    The wire temperatures are carried implicitly: T = V + V̇/a3 is an invertible
    linear change of coordinates, so the second derivative of V follows from
    the wire-temperature rate.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = params.n
    if x.shape[-1] != params.nx or u.shape[-1] != 2:
        raise InvalidArgumentError("state/input has the wrong length")
    theta, V, theta_dot, Vd = unpack_state(x, n)
    T = wire_temperatures(x, params)
    f = actuation_force(T[..., 0], T[..., 1], params.left, params.right, n)
    acc = manipulator_accel(theta, theta_dot, f, params.manip)
    Vdd = np.empty_like(Vd)
    for j, side in enumerate((params.left, params.right)):
        Tdot = wire_temp_derivative(T[..., j], u[..., j], side)
        Vdd[..., j] = side.a3 * (Tdot - measured_temp_derivative(V[..., j], T[..., j], side))
    return np.concatenate([theta_dot, Vd, acc, Vdd], axis=-1)


def discrete_step(x, u, cfg, params, step_index=0):
    """x_{k+1}: RK4 sub-steps across one sample period with u held constant."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    links, scal = params.kernel_args
    out = _kernels.rk4_step(x, u, cfg.dt_integration, cfg.substeps, links, scal)
    if not np.all(np.isfinite(out)):
        raise IntegrationDivergedError(step_index)
    return out


@dataclass
class Rollout:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    phi: np.ndarray


def bend_angles(x, params):
    return tip_bend_angle(np.asarray(x)[..., :params.n], params.manip)


def rollout(x0, u_seq, cfg, params):
    """Open-loop simulation; returns len(u_seq)+1 samples including x0."""
    u_seq = np.atleast_2d(np.asarray(u_seq, dtype=float))
    if u_seq.shape[0] == 0:
        raise InvalidArgumentError("input sequence is empty")
    links, scal = params.kernel_args
    X, bad = _kernels.rollout(np.asarray(x0, dtype=float), np.ascontiguousarray(u_seq),
                              cfg.dt_integration, cfg.substeps, links, scal)
    if bad >= 0:
        raise IntegrationDivergedError(bad)
    t = cfg.dt_sample * np.arange(X.shape[0])
    return Rollout(t=t, x=X, u=u_seq, phi=bend_angles(X, params))


# ------------------------------------------------------------- curvature maps

def theta_from_phi_cc(phi, n):
    """Equal joint angles θ_i = 2φ/(n+1) that put the tip at bend angle φ."""
    phi = np.asarray(phi, dtype=float)
    return np.repeat((2.0 * phi / (n + 1))[..., None], n, axis=-1)


def phi_from_sensor(alpha):
    """Bend angle from the sensor's tip tangent angle under constant curvature."""
    return np.asarray(alpha) / 2.0


def beam_weights(n):
    """Cantilever profile b_i = (n-i+1)² / Σ_j (n-j)², i = 1..n.

    For n = 1 the denominator vanishes and the single joint takes the whole bend.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if n == 1:
        return np.ones(1)
    i = np.arange(1, n + 1)
    return (n - i + 1.0) ** 2 / np.sum((n - i) ** 2.0)


def beam_theta_distribution(phi_eq, lam, n):
    return lam * np.asarray(phi_eq, dtype=float)[..., None] * beam_weights(n)


# ------------------------------------------------------------------ PI control

@dataclass(frozen=True)
class PIGains:
    """PI law on bend-angle error (gains per radian).

    ``base_duty`` is the common-mode duty applied to both wires in ``both`` mode.
    """

    kp: float = 3.0
    ki: float = 0.3
    integ_limit: float = 4.0
    base_duty: float = 0.2

    def __post_init__(self):
        if not (self.kp > 0 and self.ki > 0 and self.integ_limit > 0):
            raise InvalidArgumentError("PI gains must be positive")


PI_MODES = ("left-only", "right-only", "both")


def pi_controller_step(phi, phi_eq, gains, integ_state, mode, dt):
    """One PI update; returns (u = [D_l, D_r], new integrator state)."""
    if mode not in PI_MODES:
        raise InvalidArgumentError(f"unknown PI mode {mode!r}")
    err = phi_eq - phi
    integ = float(np.clip(integ_state + err * dt, -gains.integ_limit, gains.integ_limit))
    v = gains.kp * err + gains.ki * integ
    if mode == "right-only":
        u = (0.0, v)
    elif mode == "left-only":
        u = (-v, 0.0)
    else:
        u = (gains.base_duty - 0.5 * v, gains.base_duty + 0.5 * v)
    return np.clip(np.array(u), 0.0, 1.0), integ


# ---------------------------------------------------------------- CSV tables

def _is_angle(name):
    return name.startswith(("phi", "theta"))


def write_table(path, header, columns):
    """Write numeric columns under ``header``.

    Angle columns (``phi*``, ``theta*``) are expected in degrees and written
    with 14 significant digits, which makes the degree/radian conversion at
    the file boundary a fixpoint; everything else is written exactly.
    """
    fmt = ["%.14g" if _is_angle(h) else None for h in header]
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    if data.shape[1] != len(header):
        raise InvalidArgumentError("header and column count differ")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow([repr(float(v)) if f is None else f % v for f, v in zip(fmt, row)])


# ------------------------------------------------------ calibration datasets

DATASET_KINDS = {"left": "left-only", "right": "right-only", "mixed": "both"}
CSV_COLUMNS = ("t", "phi", "phi_eq", "V_l", "V_r", "D_l", "D_r")


@dataclass
class CalibrationDataset:
    """Timestamped log {φ, φ_eq, V, D}. Angles in radians, temperatures in °C."""

    t: np.ndarray
    phi: np.ndarray
    phi_eq: np.ndarray
    V_l: np.ndarray
    V_r: np.ndarray
    D_l: np.ndarray
    D_r: np.ndarray
    kind: str = "unknown"

    def __post_init__(self):
        for name in CSV_COLUMNS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        lens = {getattr(self, name).shape for name in CSV_COLUMNS}
        if len(lens) != 1 or len(next(iter(lens))) != 1:
            raise InvalidArgumentError("dataset columns must be 1D and equally long")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise InvalidArgumentError("dataset time must be strictly increasing")

    def __len__(self):
        return self.t.size

    @property
    def dt(self):
        return float(np.median(np.diff(self.t)))

    def V(self, side):
        return self.V_l if side == "left" else self.V_r

    def D(self, side):
        return self.D_l if side == "left" else self.D_r

    @property
    def D_seq(self):
        return np.column_stack([self.D_l, self.D_r])

    def write_csv(self, path):
        deg = {"phi", "phi_eq"}
        write_table(path, CSV_COLUMNS,
                    [np.rad2deg(getattr(self, c)) if c in deg else getattr(self, c) for c in CSV_COLUMNS])

    @classmethod
    def read_csv(cls, path, kind="unknown"):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or tuple(rows[0]) != CSV_COLUMNS:
            raise InvalidArgumentError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
        try:
            data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(CSV_COLUMNS))
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}: {exc}") from exc
        cols = dict(zip(CSV_COLUMNS, data.T))
        cols["phi"] = np.deg2rad(cols["phi"])
        cols["phi_eq"] = np.deg2rad(cols["phi_eq"])
        return cls(kind=kind, **cols)


def generate_calibration_dataset(kind, schedule, dwell, cfg, params, seed=0,
                                 gains=PIGains(), noise_phi=0.0, noise_V=0.0, x0=None):
    """Run the PI controller through a list of set-points and log the result.

    ``kind`` is ``"left"``, ``"right"`` or ``"mixed"``; single-sided kinds use
    set-points of the matching sign with |φ_eq| < 45°. Additive Gaussian noise
    (std ``noise_phi`` rad, ``noise_V`` °C) is applied to the logged φ and V
    only; the controller acts on the true bend angle.
    """
    if kind not in DATASET_KINDS:
        raise InvalidArgumentError(f"unknown dataset kind {kind!r}")
    schedule = np.atleast_1d(np.asarray(schedule, dtype=float))
    if schedule.size == 0:
        raise InvalidArgumentError("set-point schedule is empty")
    limit = math.radians(45.0)
    if kind == "right" and np.any((schedule <= 0) | (schedule >= limit)):
        raise InvalidArgumentError("right-side set-points must lie in (0, 45°)")
    if kind == "left" and np.any((schedule >= 0) | (schedule <= -limit)):
        raise InvalidArgumentError("left-side set-points must lie in (-45°, 0)")

    mode = DATASET_KINDS[kind]
    steps = int(round(dwell / cfg.dt_sample))
    links, scal = params.kernel_args
    x = ambient_state(params) if x0 is None else np.asarray(x0, dtype=float)
    total = steps * schedule.size
    X = np.empty((total, params.nx))
    U = np.empty((total, 2))
    ref = np.repeat(schedule, steps)
    integ = 0.0
    for k in range(total):
        X[k] = x
        phi = float(tip_bend_angle(x[:params.n], params.manip))
        U[k], integ = pi_controller_step(phi, ref[k], gains, integ, mode, cfg.dt_sample)
        x = _kernels.rk4_step(x, U[k], cfg.dt_integration, cfg.substeps, links, scal)
        if not np.all(np.isfinite(x)):
            raise IntegrationDivergedError(k + 1)

    rng = np.random.default_rng(seed)
    phi = bend_angles(X, params) + noise_phi * rng.standard_normal(total)
    V = X[:, params.n:params.n + 2] + noise_V * rng.standard_normal((total, 2))
    return CalibrationDataset(t=cfg.dt_sample * np.arange(total), phi=phi, phi_eq=ref,
                              V_l=V[:, 0], V_r=V[:, 1], D_l=U[:, 0], D_r=U[:, 1], kind=kind)


def random_schedule(kind, count, rng, low_deg=5.0, high_deg=40.0):
    mag = np.radians(rng.uniform(low_deg, high_deg, size=count))
    if kind == "left":
        return -mag
    if kind == "right":
        return mag
    return mag * rng.choice([-1.0, 1.0], size=count)
