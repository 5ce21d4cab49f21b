"""Direct-transcription trajectory optimisation for the SMA limb.

Decision variables are the knot states x_1..x_{N-1} and inputs u_0..u_{N-2}
(x_0 is the fixed initial state). The dynamics enter as defects
x_{k+1} - F(x_k, u_k), where F is the same zero-order-hold RK4 map the
simulator uses. The NLP is solved with an augmented Lagrangian; each
subproblem is a bound-constrained (0 <= u <= 1) minimisation done by a
projected Gauss-Newton method. Variables are ordered stage by stage,
[u_0, x_1, u_1, x_2, ...], which makes the Gauss-Newton matrix block
tridiagonal, so every step is a banded Cholesky solve.

Defect Jacobians come from complex-step differentiation of the compiled RK4
map, one batched call per iteration.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from . import _kernels
from .errors import InfeasibleProblemError, InvalidArgumentError
from .simcore import (
    LimbParams,
    SimConfig,
    ambient_state,
    bend_angles,
    theta_from_phi_cc,
    wire_temperatures,
    write_table,
)

CS_STEP = 1e-20
TEMP_SCALE = 10.0


def state_scale(n):
    """Nominal magnitudes used to scale defects: θ, V, θ̇, V̇."""
    return np.concatenate([np.full(n, 0.1), [10.0, 10.0], np.ones(n), [1.0, 1.0]])


@dataclass
class TrajOptProblem:
    """Tracking problem on a uniform knot grid.

    ``Q``, ``R`` and ``Q_N`` are diagonals. ``t_warm`` is in seconds; the
    warm-up floor applies at knots strictly after ``k_warm = ceil(t_warm/dt_knot)``.
    Set ``T_warm`` to None to drop the floor.
    """

    params: LimbParams
    x_init: np.ndarray
    x_ref: np.ndarray
    dt_knot: float = 0.1
    dt_integration: float = 0.01
    Q: np.ndarray = None
    R: np.ndarray = None
    Q_N: np.ndarray = None
    T_max: float = 100.0
    T_warm: float = 45.0
    t_warm: float = 20.0
    margin: float = 1e-3

    def __post_init__(self):
        n, nx = self.params.n, self.params.nx
        self.x_init = np.asarray(self.x_init, dtype=float)
        self.x_ref = np.atleast_2d(np.asarray(self.x_ref, dtype=float))
        if self.x_init.shape != (nx,) or self.x_ref.shape[1:] != (nx,):
            raise InvalidArgumentError(f"states must have length {nx}")
        if self.N < 2:
            raise InvalidArgumentError("need at least two knots")
        if self.Q is None:
            self.Q = 100.0 * np.concatenate([np.ones(n), np.zeros(nx - n)])
        if self.R is None:
            self.R = 2.0 * np.ones(2)
        if self.Q_N is None:
            self.Q_N = 1000.0 * np.asarray(self.Q, dtype=float)
        self.Q = np.broadcast_to(np.asarray(self.Q, dtype=float), (nx,)).copy()
        self.Q_N = np.broadcast_to(np.asarray(self.Q_N, dtype=float), (nx,)).copy()
        self.R = np.broadcast_to(np.asarray(self.R, dtype=float), (2,)).copy()
        for w in (self.Q, self.R, self.Q_N):
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise InvalidArgumentError("weights must be finite and nonnegative")
        if self.T_warm is not None and not self.T_warm < self.T_max:
            raise InvalidArgumentError("T_warm must be below T_max")
        SimConfig(self.dt_integration, self.dt_knot)  # validates the grid

    @property
    def N(self):
        return self.x_ref.shape[0]

    @property
    def sim(self):
        return SimConfig(self.dt_integration, self.dt_knot)

    @property
    def k_warm(self):
        return int(math.ceil(self.t_warm / self.dt_knot - 1e-9))

    @property
    def t(self):
        return self.dt_knot * np.arange(self.N)

    def warm_mask(self):
        """Boolean per knot: does the warm-up floor apply?"""
        mask = np.arange(self.N) > self.k_warm
        return mask if self.T_warm is not None else np.zeros(self.N, bool)

    def objective(self, X, U):
        dx = X - self.x_ref
        run = np.sum(dx[:-1] ** 2 * self.Q) + np.sum(U ** 2 * self.R)
        return 0.5 * (run + np.sum(dx[-1] ** 2 * self.Q_N))

    def to_dict(self):
        return {
            "params": self.params.to_dict(), "x_init": self.x_init.tolist(),
            "x_ref": self.x_ref.tolist(), "dt_knot": self.dt_knot,
            "dt_integration": self.dt_integration, "Q": self.Q.tolist(),
            "R": self.R.tolist(), "Q_N": self.Q_N.tolist(), "T_max": self.T_max,
            "T_warm": self.T_warm, "t_warm": self.t_warm, "margin": self.margin,
        }


@dataclass(frozen=True)
class SolverOptions:
    max_outer: int = 25
    max_inner: int = 40
    rho0: float = 10.0
    rho_max: float = 1e9
    feas_tol: float = 1e-9
    opt_tol: float = 1e-5
    u_guess: tuple = (0.25, 0.25)


@dataclass
class TrajOptSolution:
    t: np.ndarray
    x_star: np.ndarray
    u_star: np.ndarray
    phi_star: np.ndarray
    V_star: np.ndarray
    T_star: np.ndarray
    objective: float
    max_defect: float
    max_violation: float
    converged: bool
    outer_iterations: int
    inner_iterations: int
    history: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def report(self):
        return {
            "objective": self.objective, "max_defect_scaled": self.max_defect,
            "max_violation": self.max_violation, "converged": self.converged,
            "outer_iterations": self.outer_iterations,
            "inner_iterations": self.inner_iterations, "flags": list(self.flags),
        }

    def write_csv(self, path, n):
        """Solution table; angles in degrees, the last row carries no input."""
        header = ["t", "phi_star", *[f"theta_{i + 1}" for i in range(n)],
                  "V_l", "V_r", "T_l", "T_r", "D_l", "D_r"]
        u = np.vstack([self.u_star, np.full((1, 2), np.nan)])
        write_table(path, header, [self.t, np.rad2deg(self.phi_star), np.rad2deg(self.x_star[:, :n]),
                                   self.V_star, self.T_star, u])


def read_solution_csv(path):
    """Return (t, phi, theta, V, T, u) with angles in rad; u has N-1 rows."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["t", "phi_star"] or rows[0][-2:] != ["D_l", "D_r"]:
        raise InvalidArgumentError(f"{path}: not a solution file")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: {exc}") from exc
    n = len(rows[0]) - 8
    return (data[:, 0], np.deg2rad(data[:, 1]), np.deg2rad(data[:, 2:2 + n]), data[:, 2 + n:4 + n],
            data[:, 4 + n:6 + n], data[:-1, 6 + n:])


# ------------------------------------------------------------ references

def build_reference(phi_ref, n, params=None):
    """Reference states: constant-curvature θ from φ, everything else zero."""
    phi_ref = np.asarray(phi_ref, dtype=float)
    nx = 2 * n + 4
    if params is not None and params.n != n:
        raise InvalidArgumentError("n disagrees with params")
    x = np.zeros((phi_ref.size, nx))
    x[:, :n] = theta_from_phi_cc(phi_ref, n)
    return x


def resample(t_src, phi_src, t_knots):
    """Linear interpolation onto the knot grid; the knot span must be covered."""
    t_src = np.asarray(t_src, dtype=float)
    if np.any(np.diff(t_src) <= 0):
        raise InvalidArgumentError("trace time must be strictly increasing")
    if t_knots[0] < t_src[0] - 1e-9 or t_knots[-1] > t_src[-1] + 1e-9:
        raise InvalidArgumentError("trace does not cover the knot horizon")
    return np.interp(t_knots, t_src, phi_src)


def read_teach_csv(path):
    """Taught trace with header ``t,phi`` (φ in degrees); returns (t, φ [rad])."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["t", "phi"]:
        raise InvalidArgumentError(f"{path}: expected header t,phi")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 2:
        raise InvalidArgumentError(f"{path}: need at least two (t, phi) rows")
    return data[:, 0], np.deg2rad(data[:, 1])


def write_teach_csv(path, t, phi):
    write_table(path, ["t", "phi"], [t, np.rad2deg(phi)])


def hand_reference(duration=50.0, dt=0.1):
    """Two steps, then a decaying sinusoid; peaks near ±20°."""
    t = dt * np.arange(int(round(duration / dt)) + 1)
    phi = np.zeros_like(t)
    phi[(t >= 4) & (t < 14)] = 15.0
    phi[(t >= 14) & (t < 24)] = -15.0
    s = t - 24.0
    tail = s >= 0
    phi[tail] = 20.0 * np.exp(-s[tail] / 15.0) * np.sin(2 * np.pi * s[tail] / 10.0)
    return t, np.deg2rad(phi)


def synthetic_teach_trace(kind, duration=45.0, rate=50.0, seed=0):
    """A hand-guided trace stand-in sampled at ``rate`` Hz.

    ``"smooth"`` is low-pass filtered noise, ``"ramps"`` a ramp-and-hold
    sequence between random levels. Both stay within about ±20°.
    """
    from scipy.signal import butter, sosfiltfilt

    rng = np.random.default_rng(seed)
    t = np.arange(int(round(duration * rate)) + 1) / rate
    if kind == "smooth":
        sos = butter(2, 0.08, fs=rate, output="sos")
        y = sosfiltfilt(sos, rng.standard_normal(t.size + 2000))[1000:-1000]
        phi = 18.0 * y / np.max(np.abs(y))
    elif kind == "ramps":
        n_seg = max(2, int(duration // 6))
        knots_t = np.linspace(0, duration, n_seg + 1)
        levels = rng.uniform(-18, 18, n_seg + 1)
        levels[0] = 0.0
        # hold for the first 60% of each segment then ramp to the next level
        tt = np.concatenate([[knots_t[0]], np.ravel(np.column_stack(
            [knots_t[:-1] + 0.6 * np.diff(knots_t), knots_t[1:]]))])
        yy = np.concatenate([[levels[0]], np.ravel(np.column_stack([levels[:-1], levels[1:]]))])
        phi = np.interp(t, tt, yy)
    else:
        raise InvalidArgumentError(f"unknown teach trace kind {kind!r}")
    return t, np.deg2rad(phi)


def problem_from_phi(phi_knots, params, x_init=None, **kw):
    x_ref = build_reference(phi_knots, params.n, params)
    x0 = ambient_state(params) if x_init is None else x_init
    return TrajOptProblem(params=params, x_init=x0, x_ref=x_ref, **kw)


# ---------------------------------------------------------- transcription

class Transcription:
    """Stacked-variable view of a problem: defects, objective, derivatives.

    ``z`` holds stages ``[u_k, x_{k+1}]`` for k = 0..N-2.
    """

    def __init__(self, problem):
        self.pb = problem
        p = problem.params
        self.n, self.nx = p.n, p.nx
        self.m = self.nx + 2
        self.K = problem.N - 1
        self.links, self.scal = p.kernel_args
        self.h = problem.dt_integration
        self.nsub = problem.sim.substeps
        self.s = state_scale(self.n)
        n = self.n
        # T = V + V̇/a3, scaled; rows left/right, columns of x
        self.Tcoef = np.zeros((2, self.nx))
        for j, side in enumerate((p.left, p.right)):
            self.Tcoef[j, n + j] = 1.0
            self.Tcoef[j, 2 * n + 2 + j] = 1.0 / side.a3
        self.upper = np.full((self.K, 2), problem.T_max - problem.margin)
        warm = problem.warm_mask()[1:]
        self.has_lower = np.repeat(warm[:, None], 2, axis=1)
        self.lower = np.full((self.K, 2), (problem.T_warm or 0.0) + problem.margin)
        self.u_idx = (np.arange(self.K)[:, None] * self.m + np.arange(2)).ravel()
        self.lo = np.full(self.K * self.m, -np.inf)
        self.hi = np.full(self.K * self.m, np.inf)
        self.lo[self.u_idx] = 0.0
        self.hi[self.u_idx] = 1.0
        hdiag = np.concatenate([np.broadcast_to(problem.R, (self.K, 2)),
                                np.broadcast_to(problem.Q, (self.K, self.nx))], axis=1)
        hdiag[-1, 2:] = problem.Q_N
        self.hdiag = hdiag.ravel()
        self._z_ref = self.join(problem.x_ref, np.zeros((self.K, 2)))
        self._band_index()

    @property
    def dim(self):
        return self.K * self.m

    def split(self, z):
        Z = z.reshape(self.K, self.m)
        X = np.vstack([self.pb.x_init[None, :], Z[:, 2:]])
        return X, Z[:, :2]

    def join(self, X, U):
        return np.hstack([U, X[1:]]).ravel()

    def step(self, X, U):
        return _kernels.rk4_batch(np.ascontiguousarray(X), np.ascontiguousarray(U),
                                  self.h, self.nsub, self.links, self.scal)

    def defects(self, z):
        """Unscaled defects x_{k+1} - F(x_k, u_k), shape (K, nx)."""
        X, U = self.split(z)
        return X[1:] - self.step(X[:-1], U)

    def inequalities(self, z):
        """Scaled g <= 0 for knots 1..N-1: (upper, lower) each (K, 2); lower is -inf where inactive."""
        X, _ = self.split(z)
        T = X[1:] @ self.Tcoef.T
        up = (T - self.upper) / TEMP_SCALE
        low = np.where(self.has_lower, (self.lower - T) / TEMP_SCALE, -np.inf)
        return up, low

    def objective(self, z):
        X, U = self.split(z)
        return self.pb.objective(X, U)

    def objective_grad(self, z):
        return self.hdiag * (z - self._z_ref)

    def jacobian_blocks(self, z):
        """A_k = ∂F/∂x_k and B_k = ∂F/∂u_k by complex step, k = 0..K-1."""
        X, U = self.split(z)
        K, nx = self.K, self.nx
        d = nx + 2
        Xc = np.repeat(X[:-1, None, :].astype(complex), d, axis=1)
        Uc = np.repeat(U[:, None, :].astype(complex), d, axis=1)
        ar = np.arange(nx)
        Xc[:, ar, ar] += 1j * CS_STEP
        Uc[:, nx + np.arange(2), np.arange(2)] += 1j * CS_STEP
        F = _kernels.rk4_batch(Xc.reshape(K * d, nx), Uc.reshape(K * d, 2),
                               self.h, self.nsub, self.links, self.scal).reshape(K, d, nx)
        J = np.swapaxes(F.imag, 1, 2) / CS_STEP  # (K, nx, d)
        return J[:, :, :nx], J[:, :, nx:]

    def defect_jacobian(self, z):
        """Sparse ∂c/∂z of the unscaled defects."""
        from scipy.sparse import coo_matrix

        A, B = self.jacobian_blocks(z)
        K, nx, m = self.K, self.nx, self.m
        rows, cols, vals = [], [], []
        r = np.arange(nx)
        for k in range(K):
            base = k * m
            rr, cc = np.meshgrid(k * nx + r, base + np.arange(2), indexing="ij")
            rows.append(rr.ravel()), cols.append(cc.ravel()), vals.append(-B[k].ravel())
            rows.append(k * nx + r), cols.append(base + 2 + r), vals.append(np.ones(nx))
            if k > 0:
                rr, cc = np.meshgrid(k * nx + r, base - m + 2 + r, indexing="ij")
                rows.append(rr.ravel()), cols.append(cc.ravel()), vals.append(-A[k].ravel())
        return coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(K * nx, K * m)).tocsr()

    # -- augmented Lagrangian pieces

    def merit(self, z, lam, mu_up, mu_lo, rho):
        c = self.defects(z) / self.s
        up, low = self.inequalities(z)
        val = self.objective(z) + np.sum(lam * c) + 0.5 * rho * np.sum(c * c)
        for mu, g in ((mu_up, up), (mu_lo, low)):
            val += np.sum(np.maximum(0.0, mu + rho * g) ** 2 - mu ** 2) / (2 * rho)
        return val

    def _band_index(self):
        m = self.m
        r, c = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        low = r >= c
        self._diag_rc = (r[low], c[low])
        self._off_rc = (r.ravel(), c.ravel())

    def gn_system(self, z, lam, mu_up, mu_lo, rho):
        """Gradient and banded (lower form) Gauss-Newton Hessian of the merit."""
        K, nx, m, n = self.K, self.nx, self.m, self.n
        A, B = self.jacobian_blocks(z)
        c = self.defects(z) / self.s
        y = lam + rho * c  # (K, nx)
        # scaled defect k = P_k z_k + Q_k z_{k-1}
        P = np.zeros((K, nx, m))
        P[:, :, :2] = -B / self.s[None, :, None]
        P[:, :, 2:] = np.diag(1.0 / self.s)
        Qb = np.zeros((K, nx, m))
        Qb[:, :, 2:] = -A / self.s[None, :, None]
        Qb[0] = 0.0
        grad = np.einsum("kim,ki->km", P, y)
        grad[:-1] += np.einsum("kim,ki->km", Qb[1:], y[1:])
        D = rho * np.einsum("kim,kil->kml", P, P)
        D[:-1] += rho * np.einsum("kim,kil->kml", Qb[1:], Qb[1:])
        L = rho * np.einsum("kim,kil->kml", P[1:], Qb[1:])  # rows stage k+1, cols stage k

        up, low = self.inequalities(z)
        gstate = np.zeros((K, nx))
        for mu, g, sign in ((mu_up, up, 1.0), (mu_lo, low, -1.0)):
            w = np.maximum(0.0, mu + rho * g)
            act = (mu + rho * g) > 0
            coef = sign * self.Tcoef / TEMP_SCALE  # (2, nx)
            gstate += w @ coef
            for j in range(2):
                a = act[:, j].astype(float)
                D[:, 2:, 2:] += rho * a[:, None, None] * np.outer(coef[j], coef[j])[None]
        grad[:, 2:] += gstate
        grad = grad.ravel() + self.objective_grad(z)
        D = D + self.hdiag.reshape(K, m)[:, :, None] * np.eye(m)[None]

        ab = np.zeros((2 * m, K * m))
        dr, dc = self._diag_rc
        for k in range(K):
            ab[dr - dc, k * m + dc] = D[k, dr, dc]
        orr, occ = self._off_rc
        for k in range(K - 1):
            ab[m + orr - occ, k * m + occ] = L[k, orr, occ]
        return grad, ab


def _project(z, lo, hi):
    return np.minimum(np.maximum(z, lo), hi)


def _solve_banded(ab, rhs):
    """Banded Cholesky with escalating diagonal shift on failure."""
    shift = 0.0
    scale = max(1.0, float(np.max(np.abs(ab[0]))))
    for _ in range(12):
        try:
            work = ab.copy()
            work[0] += shift
            return solveh_banded(work, rhs, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            shift = 1e-10 * scale if shift == 0 else shift * 100
    raise np.linalg.LinAlgError("Gauss-Newton matrix is not positive definite")


def _inner_solve(tr, z, lam, mu_up, mu_lo, rho, omega, max_iter, history):
    """Projected Gauss-Newton on the merit; returns (z, iterations used)."""
    lo, hi = tr.lo, tr.hi
    f = tr.merit(z, lam, mu_up, mu_lo, rho)
    history.append(f)
    for it in range(max_iter):
        grad, ab = tr.gn_system(z, lam, mu_up, mu_lo, rho)
        pg = z - _project(z - grad, lo, hi)
        if np.max(np.abs(pg)) <= omega:
            return z, it
        eps = min(1e-6, float(np.max(np.abs(pg))))
        active = ((z <= lo + eps) & (grad > 0)) | ((z >= hi - eps) & (grad < 0))
        diag = ab[0].copy()
        if np.any(active):
            col = np.arange(ab.shape[1])
            for d in range(ab.shape[0]):
                hit = active[col[: ab.shape[1] - d]] | active[col[d:]]
                ab[d, : ab.shape[1] - d][hit] = 0.0
            ab[0, active] = 1.0
        rhs = np.where(active, 0.0, -grad)
        step = _solve_banded(ab, rhs)
        step[active] = -grad[active] / np.maximum(diag[active], 1e-12)

        alpha = 1.0
        while True:
            z_new = _project(z + alpha * step, lo, hi)
            f_new = tr.merit(z_new, lam, mu_up, mu_lo, rho)
            slope = grad @ (z_new - z)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * slope:
                break
            alpha *= 0.5
            if alpha < 1e-10:
                return z, it + 1
        small = f - f_new <= 1e-15 * max(1.0, abs(f))
        z, f = z_new, f_new
        history.append(f)
        if small:
            return z, it + 1
    return z, max_iter


def initial_guess(problem, u_guess=(0.25, 0.25)):
    """States from an open-loop rollout under a constant duty."""
    tr = Transcription(problem)
    U = np.tile(np.asarray(u_guess, dtype=float), (tr.K, 1))
    X, bad = _kernels.rollout(problem.x_init, U, tr.h, tr.nsub, tr.links, tr.scal)
    if bad >= 0:
        raise InvalidArgumentError("initial-guess rollout diverged")
    return tr.join(X, U)


def _infeasible_precheck(problem):
    if problem.T_warm is None or not np.any(problem.warm_mask()):
        return None
    p = problem.params
    need = problem.T_warm + problem.margin
    for name, side in (("left", p.left), ("right", p.right)):
        if side.steady_state_max <= need:
            return {"constraint": f"warm-up floor ({name})", "required": need,
                    "reachable_max": side.steady_state_max}
    return None


def solve(problem, options=SolverOptions(), z0=None):
    """Augmented-Lagrangian solve of the tracking NLP.

    Raises InfeasibleProblemError when the warm-up floor cannot be reached
    under the duty bounds or when the iterations end with constraints still
    violated. If only the iteration limit is hit with a feasible iterate, the
    best iterate is returned with ``converged=False`` and a flag.
    """
    bad = _infeasible_precheck(problem)
    if bad is not None:
        raise InfeasibleProblemError("warm-up floor above the reachable wire temperature", bad)
    tr = Transcription(problem)
    z = initial_guess(problem, options.u_guess) if z0 is None else np.asarray(z0, float).copy()
    z = _project(z, tr.lo, tr.hi)
    lam = np.zeros((tr.K, tr.nx))
    mu_up = np.zeros((tr.K, 2))
    mu_lo = np.zeros((tr.K, 2))
    rho = options.rho0
    omega, eta = 1e-2, 1e-2
    history, inner_total = [], 0
    converged = False
    viol = np.inf
    outer = 0
    for outer in range(1, options.max_outer + 1):
        merits = []
        z, used = _inner_solve(tr, z, lam, mu_up, mu_lo, rho, omega, options.max_inner, merits)
        inner_total += used
        c = tr.defects(z) / tr.s
        up, low = tr.inequalities(z)
        viol = max(np.max(np.abs(c)), np.max(up), np.max(low), 0.0)
        history.append({"outer": outer, "rho": rho, "violation": float(viol),
                        "objective": float(tr.objective(z)), "inner": used, "merit": merits})
        if viol <= max(eta, options.feas_tol):
            lam = lam + rho * c
            mu_up = np.maximum(0.0, mu_up + rho * up)
            mu_lo = np.maximum(0.0, mu_lo + rho * low)
            if viol <= options.feas_tol and omega <= options.opt_tol:
                converged = True
                break
            eta = max(eta * 0.1, options.feas_tol * 0.1)
            omega = max(omega * 0.1, options.opt_tol)
        else:
            rho = min(rho * 10.0, options.rho_max)
    flags = [] if converged else ["iteration_limit"]
    sol = _make_solution(tr, z, converged, outer, inner_total, history, flags)
    if viol > 1e-6:
        raise InfeasibleProblemError("no feasible trajectory found", check_solution(sol, problem))
    return sol


def _make_solution(tr, z, converged, outer, inner, history, flags):
    pb = tr.pb
    X, U = tr.split(z)
    c = tr.defects(z) / tr.s
    up, low = tr.inequalities(z)
    T = wire_temperatures(X, pb.params)
    return TrajOptSolution(
        t=pb.t, x_star=X, u_star=U.copy(), phi_star=bend_angles(X, pb.params),
        V_star=X[:, pb.params.n:pb.params.n + 2].copy(), T_star=T,
        objective=float(pb.objective(X, U)), max_defect=float(np.max(np.abs(c))),
        max_violation=float(max(np.max(up), np.max(low), 0.0) * TEMP_SCALE),
        converged=converged, outer_iterations=outer, inner_iterations=inner,
        history=history, flags=flags)


# ------------------------------------------------------------ verification

def check_solution(sol, problem, params=None, tol=1e-6):
    """Re-verify a solution with the simulator.

    Everything is recomputed from ``sol.x_star``/``sol.u_star``: per-interval
    defects (one RK4 knot step each), input bound violations, temperature
    excursions, and the open-loop rollout of ``u_star`` from ``x_init``
    compared with ``phi_star``. Passing different ``params`` (e.g. a perturbed
    force gain) quantifies how far the plan drifts under model error.
    """
    params = problem.params if params is None else params
    cfg = problem.sim
    links, scal = params.kernel_args
    X = np.asarray(sol.x_star, dtype=float)
    U = np.asarray(sol.u_star, dtype=float)
    s = state_scale(params.n)
    F = _kernels.rk4_batch(np.ascontiguousarray(X[:-1]), np.ascontiguousarray(U),
                           cfg.dt_integration, cfg.substeps, links, scal)
    dfx = np.abs(X[1:] - F)
    scaled = dfx / s
    k_def = int(np.argmax(np.max(scaled, axis=1)))

    bound = np.maximum(U - 1.0, -U)
    bad_bounds = [(int(k), int(j)) for k, j in zip(*np.nonzero(bound > 0))]

    T = wire_temperatures(X, params)
    over = T - problem.T_max
    warm = problem.warm_mask()
    under = np.where(warm[:, None], (problem.T_warm or 0.0) - T, -np.inf)

    Xr, diverged_at = _kernels.rollout(problem.x_init, np.ascontiguousarray(U),
                                       cfg.dt_integration, cfg.substeps, links, scal)
    phi_roll = bend_angles(Xr, params) if diverged_at < 0 else np.full(X.shape[0], np.nan)
    dphi = np.abs(phi_roll - np.asarray(sol.phi_star))
    report = {
        "max_defect": float(np.max(dfx)),
        "max_defect_scaled": float(np.max(scaled)),
        "defect_index": k_def,
        "max_bound_violation": float(max(np.max(bound), 0.0)),
        "bound_violations": bad_bounds,
        "T_max_seen": float(np.max(T)),
        "max_T_excess": float(max(np.max(over), 0.0)),
        "T_excess_index": [int(k) for k in np.nonzero(np.any(over >= 0, axis=1))[0]],
        "min_T_after_warmup": float(np.min(T[warm])) if np.any(warm) else None,
        "max_warm_shortfall": float(max(np.max(under), 0.0)),
        "warm_shortfall_index": [int(k) for k in np.nonzero(np.any(under >= 0, axis=1))[0]],
        "rollout_diverged_at": int(diverged_at),
        "rollout_max_phi_error_deg": float(np.rad2deg(np.max(dphi))),
        "rollout_phi_error_index": int(np.argmax(dphi)) if diverged_at < 0 else None,
    }
    report["feasible"] = bool(
        report["max_defect_scaled"] <= tol and not bad_bounds
        and np.all(over < 0) and np.all(under < 0) and diverged_at < 0)
    return report


def tracking_stats(phi, phi_ref):
    """Mean, median and 90th percentile of |φ - φ_ref| in degrees."""
    err = np.rad2deg(np.abs(np.asarray(phi) - np.asarray(phi_ref)))
    return {"mean": float(np.mean(err)), "median": float(np.median(err)),
            "p90": float(np.percentile(err, 90))}
