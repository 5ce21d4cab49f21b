"""Planar fixed-base serial chain with torsional springs and viscous joint damping.

Every function is vectorised over leading batch axes: ``theta`` may have shape
``(..., n)``. Complex inputs are supported throughout so the dynamics can be
differentiated by complex-step.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, InvalidArgumentError, SingularDynamicsError


@dataclass(frozen=True)
class ManipulatorParams:
    """Geometry, inertia and joint constants of the n-link chain.

    ``link_length``, ``link_mass``, ``link_com_offset`` and ``link_inertia`` are
    scalars for a uniform limb, or length-n sequences for per-link overrides.
    ``gravity_direction`` is a unit vector in the {E1, E2} base frame and is only
    used when ``gravity_on`` is set.
    """

    n: int = 5
    link_length: float = 0.02
    link_mass: float = 0.005
    link_com_offset: float = 0.01
    link_inertia: float = 6.0e-5
    k: float = 0.1
    sigma: float = 0.0015
    gravity_on: bool = False
    g: float = 9.81
    gravity_direction: tuple = field(default=(0.0, -1.0))

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"n must be a positive integer, got {self.n}")
        for name in ("link_length", "link_mass", "link_com_offset", "link_inertia"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.ndim > 1 or (v.ndim == 1 and v.shape[0] != self.n):
                raise InvalidArgumentError(f"{name} must be scalar or length {self.n}")
            if not np.all(np.isfinite(v)) or np.any(v <= 0):
                raise InvalidArgumentError(f"{name} must be strictly positive")
        if not self.k > 0:
            raise InvalidArgumentError("spring constant k must be positive")
        if not self.sigma >= 0:
            raise InvalidArgumentError("damping sigma must be nonnegative")
        gd = np.asarray(self.gravity_direction, dtype=float)
        if gd.shape != (2,) or not np.isclose(np.linalg.norm(gd), 1.0):
            raise InvalidArgumentError("gravity_direction must be a 2D unit vector")

    def per_link(self, name):
        return np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (self.n,))

    @property
    def total_length(self):
        return float(np.sum(self.per_link("link_length")))

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, tuple):
                v = list(v)
            out[k] = v
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "gravity_direction" in d:
            d["gravity_direction"] = tuple(d["gravity_direction"])
        for key in ("link_length", "link_mass", "link_com_offset", "link_inertia"):
            if isinstance(d.get(key), list):
                d[key] = tuple(d[key])
        return cls(**d)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _rcumsum(x, axis):
    return np.flip(np.cumsum(np.flip(x, axis), axis), axis)


def _check(x, n, name):
    x = np.asarray(x)
    if x.shape[-1:] != (n,):
        raise InvalidArgumentError(f"{name} must have trailing length {n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return x


def _directions(theta):
    q = np.cumsum(theta, axis=-1)
    e = np.stack([np.cos(q), np.sin(q)], axis=-1)
    ep = np.stack([-e[..., 1], e[..., 0]], axis=-1)
    return e, ep


def _positions(theta, p):
    """Proximal joint positions and COM positions, each shaped (..., n, 2)."""
    length = p.per_link("link_length")[:, None]
    lc = p.per_link("link_com_offset")[:, None]
    e, _ = _directions(theta)
    seg = length * e
    joints = np.cumsum(seg, axis=-2) - seg
    com = joints + lc * e
    return joints, com, joints[..., -1, :] + seg[..., -1, :]


def inverse_dynamics(theta, theta_dot, theta_ddot, p):
    """Joint torques M(θ)θ̈ + C(θ,θ̇)θ̇ of the bare chain.

    Gravity, springs and damping are excluded. The Newton-Euler outward
    (kinematic) and inward (force) recursions are written as cumulative sums
    along the link axis so the whole pass is vectorised.
    """
    length = p.per_link("link_length")[:, None]
    lc = p.per_link("link_com_offset")[:, None]
    m = p.per_link("link_mass")
    inertia = p.per_link("link_inertia")

    e, ep = _directions(theta)
    w = np.cumsum(theta_dot, axis=-1)[..., None]
    alpha = np.cumsum(theta_ddot, axis=-1)
    # acceleration of a point at unit distance along link i, relative to its joint
    g_seg = alpha[..., None] * ep - w**2 * e
    a_joint = np.cumsum(length * g_seg, axis=-2) - length * g_seg
    a_com = a_joint + lc * g_seg

    inertial = m[:, None] * a_com
    force = _rcumsum(inertial, axis=-2)  # force transmitted through joint i
    force_next = force - inertial  # force transmitted through joint i+1
    moment = inertia * alpha + _cross(lc * e, inertial) + _cross(length * e, force_next)
    return _rcumsum(moment, axis=-1)


def _mass_and_bias(theta, theta_dot, p):
    n = p.n
    batch = theta.shape[:-1]
    dtype = np.result_type(theta, theta_dot, float)
    th = np.broadcast_to(theta[..., None, :], batch + (n + 1, n))
    thd = np.zeros(batch + (n + 1, n), dtype=dtype)
    thd[..., 0, :] = theta_dot
    thdd = np.zeros(batch + (n + 1, n), dtype=dtype)
    thdd[..., 1:, :] = np.eye(n)
    tau = inverse_dynamics(th, thd, thdd, p)
    mass = np.swapaxes(tau[..., 1:, :], -1, -2)
    return mass, tau[..., 0, :]


def mass_matrix(theta, p):
    """Joint-space inertia matrix M(θ), built one unit-acceleration column at a time."""
    theta = _check(theta, p.n, "theta")
    mass, _ = _mass_and_bias(theta, np.zeros_like(theta), p)
    return mass


def coriolis_vector(theta, theta_dot, p):
    """C(θ,θ̇)θ̇: inverse dynamics at zero acceleration."""
    theta = _check(theta, p.n, "theta")
    theta_dot = _check(theta_dot, p.n, "theta_dot")
    return inverse_dynamics(theta, theta_dot, np.zeros(np.broadcast(theta, theta_dot).shape), p)


def forward_kinematics(theta, p):
    """Return ``(com, tip)``: link COM positions (..., n, 2) and the tip position (..., 2)."""
    theta = _check(theta, p.n, "theta")
    _, com, tip = _positions(theta, p)
    return com, tip


def gravity_potential(theta, p):
    """U_g = -g Σ m_i r_i·ĝ, zero with all COMs on the line through the base normal to ĝ."""
    theta = _check(theta, p.n, "theta")
    _, com, _ = _positions(theta, p)
    gdir = np.asarray(p.gravity_direction, dtype=float)
    m = p.per_link("link_mass")
    return -p.g * np.sum(m * (com @ gdir), axis=-1)


def _gravity_force(theta, p):
    joints, com, _ = _positions(theta, p)
    weight = p.g * p.per_link("link_mass")[:, None] * np.asarray(p.gravity_direction, dtype=float)
    moment = _rcumsum(_cross(com, np.broadcast_to(weight, com.shape)), axis=-1)
    total = _rcumsum(np.broadcast_to(weight, com.shape), axis=-2)
    return moment - _cross(joints, total)


def gravity_force(theta, p):
    """Generalized gravity torque f_g = -∇_θ U_g.

    Only defined in the reoriented calibration configuration (``gravity_on``).
    """
    if not p.gravity_on:
        raise ContractViolationError("gravity_force requires gravity_on=True")
    theta = _check(theta, p.n, "theta")
    return _gravity_force(theta, p)


def tip_bend_angle(theta, p, with_flag=False):
    """Bend angle φ = atan2(t·E2, t·E1) of the tip position.

    With ``with_flag`` also returns a boolean (array) marking tips that lie on
    the E2 axis, where the angle is ±π/2 only by continuity.
    """
    theta = _check(theta, p.n, "theta")
    _, _, tip = _positions(theta, p)
    phi = np.arctan2(tip[..., 1], tip[..., 0])
    if with_flag:
        on_axis = np.abs(tip[..., 0]) <= 1e-12 * np.linalg.norm(tip, axis=-1)
        return phi, on_axis
    return phi


def _accel(theta, theta_dot, f_act, p):
    mass, bias = _mass_and_bias(theta, theta_dot, p)
    rhs = f_act - bias - p.k * theta - p.sigma * theta_dot
    if p.gravity_on:
        rhs = rhs + _gravity_force(theta, p)
    try:
        return np.linalg.solve(mass, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularDynamicsError(str(exc)) from exc


def manipulator_accel(theta, theta_dot, f_act, p):
    """Joint accelerations θ̈ = M⁻¹(f_act [+ f_g] − Cθ̇ − kθ − σθ̇)."""
    theta = _check(theta, p.n, "theta")
    theta_dot = _check(theta_dot, p.n, "theta_dot")
    f_act = _check(f_act, p.n, "f_act")
    return _accel(theta, theta_dot, f_act, p)


def kinetic_energy(theta, theta_dot, p):
    mass = mass_matrix(theta, p)
    return 0.5 * np.einsum("...i,...ij,...j->...", theta_dot, mass, theta_dot)


def static_equilibrium(p, f_act=None, theta0=None, tol=1e-12):
    """Rest configuration: solve kθ = f_g(θ) + f_act (f_g only when gravity is on)."""
    from scipy.optimize import root

    f_act = np.zeros(p.n) if f_act is None else np.asarray(f_act, dtype=float)
    x0 = np.zeros(p.n) if theta0 is None else np.asarray(theta0, dtype=float)

    def residual(th):
        r = f_act - p.k * th
        if p.gravity_on:
            r = r + _gravity_force(th, p)
        return r

    # hybr reports "no progress" when warm-started on the root itself, so a
    # small residual is accepted; otherwise retry with LM from the straight pose
    scale = p.k * max(1.0, float(np.max(np.abs(x0))))
    for start, method in ((x0, "hybr"), (np.zeros(p.n), "lm")):
        sol = root(residual, start, method=method, tol=tol)
        if sol.success or np.max(np.abs(residual(sol.x))) <= 1e-12 * scale:
            return sol.x
    raise SingularDynamicsError(f"static equilibrium solve failed: {sol.message}")
