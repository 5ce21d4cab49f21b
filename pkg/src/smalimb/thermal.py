"""SMA wire temperature, thermocouple lag, and the antagonistic force map.

Per actuator side the model is

    dT/dt = a1 (T - T0) + a2 D
    dV/dt = a3 (T - V)

with a1 < 0 (convective decay), a2 > 0 (Joule heating at full duty) and
a3 > 0 the rate at which the measured temperature V relaxes toward the wire
temperature T.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class ThermalParams:
    a1: float = -0.05
    a2: float = 6.0
    a3: float = 0.5
    beta: float = 0.004
    T0: float = 25.0

    def __post_init__(self):
        if not self.a1 < 0:
            raise InvalidArgumentError("a1 must be negative")
        if not self.a2 > 0:
            raise InvalidArgumentError("a2 must be positive")
        if not self.a3 > 0:
            raise InvalidArgumentError("a3 must be positive")
        if not self.beta > 0:
            raise InvalidArgumentError("beta must be positive")
        if not np.isfinite(self.T0):
            raise InvalidArgumentError("T0 must be finite")

    @property
    def steady_state_max(self):
        """Wire temperature reached under constant full duty."""
        return self.T0 - self.a2 / self.a1

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)


def wire_temp_derivative(T, D, p):
    D = np.asarray(D, dtype=float)
    if np.any((D < 0) | (D > 1)) or not np.all(np.isfinite(D)):
        raise InvalidArgumentError("duty cycle must lie in [0, 1]")
    return p.a1 * (np.asarray(T) - p.T0) + p.a2 * D


def measured_temp_derivative(V, T, p):
    return p.a3 * (np.asarray(T) - np.asarray(V))


def wire_temp_from_measurement(V, V_dot, p):
    """Invert the lag: T = V + V̇/a3."""
    return np.asarray(V) + np.asarray(V_dot) / p.a3


def actuation_force(T_l, T_r, p_l, p_r, n):
    """Uniform generalized torque; the right actuator bends positive, the left negative."""
    f = p_r.beta * (np.asarray(T_r) - p_r.T0) - p_l.beta * (np.asarray(T_l) - p_l.T0)
    return np.asarray(f)[..., None] * np.ones(n)


def thermal_system_matrices(p):
    """Continuous-time (A, B) for the state [T - T0, V - T0] driven by D."""
    A = np.array([[p.a1, 0.0], [p.a3, -p.a3]])
    B = np.array([p.a2, 0.0])
    return A, B


def zoh_discretize(p, dt):
    """Exact zero-order-hold discretisation of the (T, V) block over ``dt``."""
    from scipy.linalg import expm

    A, B = thermal_system_matrices(p)
    aug = np.zeros((3, 3))
    aug[:2, :2] = A
    aug[:2, 2] = B
    E = expm(aug * dt)
    return E[:2, :2], E[:2, 2]


def simulate_thermal(D, dt, p, T_init=None, V_init=None):
    """Exact sampled response of (T, V) to a piecewise-constant duty sequence.

    Returns arrays of length ``len(D) + 1`` starting at the initial condition
    (ambient by default). The forced part is evaluated as a digital filter,
    the free part from the eigen-decomposition of the sampled system matrix.
    """
    from scipy.signal import lfilter, ss2tf

    D = np.asarray(D, dtype=float)
    Ad, Bd = zoh_discretize(p, dt)
    z0 = np.array([(p.T0 if T_init is None else T_init) - p.T0,
                   (p.T0 if V_init is None else V_init) - p.T0])
    u = np.append(D, 0.0)
    forced = np.empty((u.size, 2))
    for row in range(2):
        num, den = ss2tf(Ad, Bd[:, None], np.eye(2)[row:row + 1], np.zeros((1, 1)))
        forced[:, row] = lfilter(num[0], den, u)
    steps = np.arange(u.size)
    mu = np.diag(Ad)  # lower triangular
    if not np.any(z0 != 0):
        free = 0.0
    elif abs(mu[0] - mu[1]) > 1e-6:
        vec = np.array([[mu[0] - mu[1], 0.0], [Ad[1, 0], 1.0]])
        coeff = np.linalg.solve(vec, z0)
        free = (mu[None, :] ** steps[:, None] * coeff) @ vec.T
    else:
        free = np.empty((u.size, 2))
        free[0] = z0
        for k in range(1, u.size):
            free[k] = Ad @ free[k - 1]
    z = forced + free
    return z[:, 0] + p.T0, z[:, 1] + p.T0
