"""Independent closed-form references used across the test-suite."""

import numpy as np


def two_link_mass(th2, m, l1, c, inertia):
    """Textbook planar two-link inertia matrix (inertias about each COM)."""
    m1, m2 = m
    c1, c2 = c
    i1, i2 = inertia
    cos2 = np.cos(th2)
    m11 = i1 + i2 + m1 * c1**2 + m2 * (l1**2 + c2**2 + 2 * l1 * c2 * cos2)
    m12 = i2 + m2 * (c2**2 + l1 * c2 * cos2)
    m22 = i2 + m2 * c2**2
    return np.array([[m11, m12], [m12, m22]])


def two_link_coriolis(th2, thd, m2, l1, c2):
    h = m2 * l1 * c2 * np.sin(th2)
    return np.array([-h * (2 * thd[0] * thd[1] + thd[1] ** 2), h * thd[0] ** 2])


def thermal_closed_form(t, D, a1, a2, a3, T0, T_init, V_init):
    """Exact (T, V) at time t under constant duty D from (T_init, V_init)."""
    zss = -a2 * D / a1
    z0 = T_init - T0
    w0 = V_init - T0
    e1 = np.exp(a1 * t)
    e3 = np.exp(-a3 * t)
    z = zss + (z0 - zss) * e1
    w = zss + (z0 - zss) * a3 / (a1 + a3) * (e1 - e3) + (w0 - zss) * e3
    return T0 + z, T0 + w


def thermal_piecewise(D, dt, a1, a2, a3, T0, T_init=None, V_init=None):
    """Step-by-step closed form under a zero-order-hold duty sequence."""
    T = [T0 if T_init is None else T_init]
    V = [T0 if V_init is None else V_init]
    for d in D:
        t_next, v_next = thermal_closed_form(dt, d, a1, a2, a3, T0, T[-1], V[-1])
        T.append(t_next)
        V.append(v_next)
    return np.array(T), np.array(V)
