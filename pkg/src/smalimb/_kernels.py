"""Compiled hot path for the combined limb/actuator dynamics.

These kernels duplicate the physics of :mod:`smalimb.manipulator` and
:mod:`smalimb.thermal` as scalar loops so that long rollouts and batched
defect Jacobians run at compiled speed. The numpy implementations remain the
reference; the test-suite checks the two agree.

Kernels are written without conjugation or branching on values so they accept
complex128 arrays, which is how the trajectory optimiser differentiates them.

State layout (length 2n+4): [theta(n), V_l, V_r, theta_dot(n), Vdot_l, Vdot_r].
Scalar parameter vector: see ``SCALAR_FIELDS``.
"""

import numpy as np
from numba import njit

SCALAR_FIELDS = (
    "k", "sigma", "gravity_on", "g", "gx", "gy", "T0",
    "a1_l", "a2_l", "a3_l", "beta_l",
    "a1_r", "a2_r", "a3_r", "beta_r",
)


@njit(cache=True)
def _rnea(c, s, w, alpha, links, tau):
    n = c.shape[0]
    # typed zeros come from zero-filled buffers: tau may be uninitialised, and
    # 0 * garbage is NaN whenever the garbage decodes as inf/NaN
    acx = np.zeros_like(tau)
    acy = np.zeros_like(tau)
    zero = acx[0]
    ax = zero
    ay = zero
    for i in range(n):
        gx = -alpha[i] * s[i] - w[i] * w[i] * c[i]
        gy = alpha[i] * c[i] - w[i] * w[i] * s[i]
        acx[i] = ax + links[2, i] * gx
        acy[i] = ay + links[2, i] * gy
        ax = ax + links[0, i] * gx
        ay = ay + links[0, i] * gy
    fx = zero
    fy = zero
    acc = zero
    for i in range(n - 1, -1, -1):
        fix = links[1, i] * acx[i]
        fiy = links[1, i] * acy[i]
        mom = (links[3, i] * alpha[i]
               + links[2, i] * (c[i] * fiy - s[i] * fix)
               + links[0, i] * (c[i] * fy - s[i] * fx))
        fx = fx + fix
        fy = fy + fiy
        acc = acc + mom
        tau[i] = acc


@njit(cache=True)
def _gravity(c, s, links, scal, out):
    n = c.shape[0]
    px = np.zeros_like(out)
    py = np.zeros_like(out)
    x = px[0]
    y = px[0]
    for i in range(n):
        px[i] = x
        py[i] = y
        x = x + links[0, i] * c[i]
        y = y + links[0, i] * s[i]
    wx_sum = px[0]
    wy_sum = px[0]
    mom = px[0]
    for i in range(n - 1, -1, -1):
        wx = scal[3] * links[1, i] * scal[4]
        wy = scal[3] * links[1, i] * scal[5]
        cx = px[i] + links[2, i] * c[i]
        cy = py[i] + links[2, i] * s[i]
        mom = mom + cx * wy - cy * wx
        wx_sum = wx_sum + wx
        wy_sum = wy_sum + wy
        out[i] = mom - (px[i] * wy_sum - py[i] * wx_sum)


@njit(cache=True)
def _spd_solve(a, b):
    # Cholesky without conjugation: analytic in the entries, so complex-step safe.
    n = b.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j]
        for k in range(j):
            d = d - L[j, k] * L[j, k]
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            v = a[i, j]
            for k in range(j):
                v = v - L[i, k] * L[j, k]
            L[i, j] = v / L[j, j]
    y = np.empty_like(b)
    for i in range(n):
        v = b[i]
        for k in range(i):
            v = v - L[i, k] * y[k]
        y[i] = v / L[i, i]
    x = np.empty_like(b)
    for i in range(n - 1, -1, -1):
        v = y[i]
        for k in range(i + 1, n):
            v = v - L[k, i] * x[k]
        x[i] = v / L[i, i]
    return x


@njit(cache=True)
def joint_accel(theta, theta_dot, force, links, scal):
    n = theta.shape[0]
    c = np.empty_like(theta)
    s = np.empty_like(theta)
    w = np.empty_like(theta)
    q = 0.0 * theta[0]
    wa = 0.0 * theta[0]
    for i in range(n):
        q = q + theta[i]
        wa = wa + theta_dot[i]
        c[i] = np.cos(q)
        s[i] = np.sin(q)
        w[i] = wa
    zero = np.zeros_like(theta)
    bias = np.empty_like(theta)
    _rnea(c, s, w, zero, links, bias)
    mass = np.empty((n, n), dtype=theta.dtype)
    col = np.empty_like(theta)
    alpha = np.empty_like(theta)
    for j in range(n):
        for i in range(n):
            alpha[i] = 1.0 if i >= j else 0.0
        _rnea(c, s, zero, alpha, links, col)
        for i in range(n):
            mass[i, j] = col[i]
    rhs = np.empty_like(theta)
    for i in range(n):
        rhs[i] = force[i] - bias[i] - scal[0] * theta[i] - scal[1] * theta_dot[i]
    if scal[2] != 0.0:
        fg = np.empty_like(theta)
        _gravity(c, s, links, scal, fg)
        for i in range(n):
            rhs[i] = rhs[i] + fg[i]
    return _spd_solve(mass, rhs)


@njit(cache=True)
def full_rhs(x, u, links, scal):
    n = (x.shape[0] - 4) // 2
    T0 = scal[6]
    Vl = x[n]
    Vr = x[n + 1]
    Vdl = x[2 * n + 2]
    Vdr = x[2 * n + 3]
    Tl = Vl + Vdl / scal[9]
    Tr = Vr + Vdr / scal[13]
    f = scal[14] * (Tr - T0) - scal[10] * (Tl - T0)
    force = np.empty(n, dtype=x.dtype)
    for i in range(n):
        force[i] = f
    theta = x[:n].copy()
    theta_dot = x[n + 2:2 * n + 2].copy()
    acc = joint_accel(theta, theta_dot, force, links, scal)
    dx = np.empty_like(x)
    for i in range(n):
        dx[i] = theta_dot[i]
        dx[n + 2 + i] = acc[i]
    dx[n] = Vdl
    dx[n + 1] = Vdr
    Tdl = scal[7] * (Tl - T0) + scal[8] * u[0]
    Tdr = scal[11] * (Tr - T0) + scal[12] * u[1]
    dx[2 * n + 2] = scal[9] * (Tdl - Vdl)
    dx[2 * n + 3] = scal[13] * (Tdr - Vdr)
    return dx


@njit(cache=True)
def rk4_step(x, u, h, nsub, links, scal):
    """Advance one sample period: ``nsub`` RK4 sub-steps of size ``h`` with u held."""
    y = x.copy()
    for _ in range(nsub):
        k1 = full_rhs(y, u, links, scal)
        k2 = full_rhs(y + 0.5 * h * k1, u, links, scal)
        k3 = full_rhs(y + 0.5 * h * k2, u, links, scal)
        k4 = full_rhs(y + h * k3, u, links, scal)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


@njit(cache=True)
def rk4_batch(X, U, h, nsub, links, scal):
    out = np.empty_like(X)
    for b in range(X.shape[0]):
        out[b] = rk4_step(X[b], U[b], h, nsub, links, scal)
    return out


@njit(cache=True)
def rollout(x0, U, h, nsub, links, scal):
    """Iterate ``rk4_step``; returns (states, index of first non-finite state or -1)."""
    K = U.shape[0]
    X = np.empty((K + 1, x0.shape[0]), dtype=x0.dtype)
    X[0] = x0
    for k in range(K):
        X[k + 1] = rk4_step(X[k], U[k], h, nsub, links, scal)
        if not np.all(np.isfinite(X[k + 1])):
            return X, k + 1
    return X, -1
