"""Parameter identification from gravity-deflection, release and PI-hold logs.

Four procedures, run in this order on a physical (or synthetic) limb:

1. spring constant k from static gravity deflection, alternating with the
   beam-profile correction factor λ;
2. damping σ by matching a damped-sinusoid fit of a release trace against the
   same fit applied to model rollouts;
3. per-side heating/lag coefficients (a1, a2, a3) by two-stage estimation;
4. per-side force gains β from quasi-static points of the same logs.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import make_smoothing_spline
from scipy.optimize import least_squares
from scipy.signal import find_peaks, savgol_filter

from .errors import ConvergenceError, DatasetInsufficientError, InvalidArgumentError, UnfittableError
from .manipulator import _gravity_force, mass_matrix, static_equilibrium, tip_bend_angle
from .simcore import (
    LimbParams,
    SimConfig,
    ambient_state,
    beam_theta_distribution,
    beam_weights,
    rollout,
    theta_from_phi_cc,
)
from .thermal import ThermalParams, simulate_thermal

# ----------------------------------------------------------------- spring fit


@dataclass
class SpringFitResult:
    k: float
    lam: float
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def spring_constant_lstsq(theta_eq, p):
    """Least-squares k from the rest condition kθ = f_g(θ), stacked over observations.

    ``f_g`` is the generalized gravity force (-∇U_g) acting on the joints, so
    the spring balances it directly. Rows of ``theta_eq`` are observations.
    """
    theta_eq = np.atleast_2d(theta_eq)
    fg = _gravity_force(theta_eq, p)
    k = np.sum(theta_eq * fg) / np.sum(theta_eq * theta_eq)
    resid = float(np.sqrt(np.mean((k * theta_eq - fg) ** 2)))
    return float(k), resid


def correction_factor(theta_sim, phi_sim):
    """λ* = θ_i / (φ b_i), averaged over joints."""
    b = beam_weights(theta_sim.shape[-1])
    return float(np.mean(theta_sim / (phi_sim * b)))


def fit_spring_constant(phi_eq, mp, lam0=1.0, tol=1e-6, max_iter=50):
    """Alternate least-squares k and simulated λ* until both settle.

    ``phi_eq`` are observed tip bend angles (rad) of the limb at rest under
    gravity; ``mp`` supplies the measured geometry/masses and must have
    ``gravity_on``. Raises :class:`ConvergenceError` (with the iterate
    history) after ``max_iter`` rounds.
    """
    if not mp.gravity_on:
        raise InvalidArgumentError("spring calibration needs the gravity orientation (gravity_on=True)")
    phi_eq = np.atleast_1d(np.asarray(phi_eq, dtype=float))
    if phi_eq.size == 0:
        raise InvalidArgumentError("need at least one equilibrium observation")
    if np.any(phi_eq == 0):
        raise InvalidArgumentError("equilibrium observations must be deflected (φ ≠ 0)")

    lam = float(lam0)
    k_prev = None
    history = []
    theta_guess = None
    for it in range(1, max_iter + 1):
        theta_hat = beam_theta_distribution(phi_eq, lam, mp.n)
        k, resid = spring_constant_lstsq(theta_hat, mp)
        if not k > 0:
            raise ConvergenceError(f"non-positive spring estimate k={k}", history)
        theta_sim = static_equilibrium(mp.replace(k=k), theta0=theta_guess)
        theta_guess = theta_sim
        phi_sim = float(tip_bend_angle(theta_sim, mp))
        lam_new = correction_factor(theta_sim, phi_sim)
        history.append({"iteration": it, "k": k, "lam": lam, "lam_next": lam_new, "residual": resid})
        done = (k_prev is not None and abs(k - k_prev) <= tol * k
                and abs(lam_new - lam) <= tol * lam)
        k_prev, lam = k, lam_new
        if done:
            return SpringFitResult(k=k, lam=lam, iterations=it, residual=resid, converged=True, history=history)
    raise ConvergenceError(f"spring/λ iteration did not converge in {max_iter} iterations", history)


# --------------------------------------------------------- damped sinusoid fit


@dataclass
class DampedSinusoidFit:
    A: float
    zeta: float
    omega_n: float
    varphi: float
    b: float
    rms: float
    short_record: bool = False

    @property
    def sigma_star(self):
        return self.zeta * self.omega_n

    @property
    def omega_d(self):
        return self.omega_n * math.sqrt(1.0 - self.zeta**2)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.A * np.exp(-self.sigma_star * t) * np.sin(self.omega_d * t + self.varphi) + self.b

    def to_dict(self):
        d = asdict(self)
        d["sigma_star"] = self.sigma_star
        return d


def damped_sinusoid(t, A, zeta, omega_n, varphi, b):
    wd = omega_n * np.sqrt(1.0 - zeta**2)
    return A * np.exp(-zeta * omega_n * t) * np.sin(wd * t + varphi) + b


def _initial_guess(t, y):
    tail = y[int(0.8 * y.size):]
    b = float(np.mean(tail))
    yc = y - b
    crossings = np.count_nonzero(np.diff(np.signbit(yc)))
    if crossings < 2:
        raise UnfittableError("no detectable oscillation (fewer than 2 sign changes about the trend)")
    peaks, _ = find_peaks(np.abs(yc))
    if peaks.size < 2:
        raise UnfittableError("no detectable oscillation (fewer than 2 extrema)")
    # successive |extrema| are half a damped period apart
    half = np.diff(t[peaks])
    omega_d = math.pi / float(np.median(half))
    amps = np.abs(yc[peaks])
    good = amps > 0.05 * amps[0]
    if np.count_nonzero(good) >= 2:
        tp, ap = t[peaks][good], np.log(amps[good])
        rate = max(-np.polyfit(tp, ap, 1)[0], 1e-6)
    else:
        rate = 1e-3 * omega_d
    zeta = rate / math.hypot(rate, omega_d)
    omega_n = math.hypot(rate, omega_d)
    env = np.exp(-rate * t)
    basis = np.column_stack([env * np.sin(omega_d * t), env * np.cos(omega_d * t)])
    (c, s), *_ = np.linalg.lstsq(basis, yc, rcond=None)
    return np.array([math.hypot(c, s), zeta, omega_n, math.atan2(s, c), b]), crossings


def fit_damped_sinusoid(t, phi):
    """Least-squares fit of φ(t) ≈ A e^{-ζω t} sin(ω√(1-ζ²) t + ϕ) + b.

    Initial values come from the extrema: their spacing gives the damped
    frequency, the log of their magnitudes gives the decay rate, and the
    tail mean gives the offset. Time is measured from ``t[0]``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(phi, dtype=float)
    if t.shape != y.shape or t.size < 8:
        raise InvalidArgumentError("need matching t/phi arrays with at least 8 samples")
    t = t - t[0]
    x0, crossings = _initial_guess(t, y)
    scale = max(float(np.max(np.abs(y - x0[4]))), 1e-12)

    def resid(p):
        return (damped_sinusoid(t, *p) - y) / scale

    lo = [-np.inf, 1e-9, 1e-9, -np.inf, -np.inf]
    hi = [np.inf, 1.0 - 1e-9, np.inf, np.inf, np.inf]
    x0[1] = min(max(x0[1], 1e-6), 0.99)
    sol = least_squares(resid, x0, bounds=(lo, hi), method="trf", x_scale="jac",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    A, zeta, omega_n, varphi, b = sol.x
    if A < 0:
        A, varphi = -A, varphi + math.pi
    varphi = math.remainder(varphi, 2 * math.pi)
    rms = float(np.sqrt(np.mean((damped_sinusoid(t, A, zeta, omega_n, varphi, b) - y) ** 2)))
    periods = crossings / 2.0
    return DampedSinusoidFit(A=float(A), zeta=float(zeta), omega_n=float(omega_n), varphi=float(varphi),
                             b=float(b), rms=rms, short_record=periods < 4)


# ---------------------------------------------------------------- damping fit


@dataclass
class DampingFitResult:
    sigma: float
    sigma_star_data: float
    sigma_star_model: float
    evaluations: int
    interval: tuple
    history: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _stable_substeps(mp, dt):
    # |eigenvalue| of the linearised chain is bounded by σρ + sqrt(kρ), ρ = max eig(M⁻¹)
    rho = float(np.max(np.linalg.eigvalsh(np.linalg.inv(mass_matrix(np.zeros(mp.n), mp)))))
    bound = mp.sigma * rho + math.sqrt(mp.k * rho)
    return max(1, math.ceil(dt * bound / 2.0))


def release_trace(mp, phi0, duration, dt, sigma=None):
    """Unforced rollout from a constant-curvature deflection φ0, no gravity, sampled every ``dt``.

    The RK4 sub-step is shortened as needed to stay stable for large σ.
    """
    mp = mp.replace(gravity_on=False, **({} if sigma is None else {"sigma": sigma}))
    params = LimbParams(manip=mp)
    x0 = ambient_state(params, theta=theta_from_phi_cc(phi0, mp.n))
    steps = int(round(duration / dt))
    sub = _stable_substeps(mp, dt)
    r = rollout(x0, np.zeros((steps, 2)), SimConfig(dt / sub, dt), params)
    return r.t, r.phi


def golden_section(fun, lo, hi, tol):
    """Minimise a unimodal scalar function on [lo, hi]; returns (x, f(x), evaluations)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    nfev = 2
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
        nfev += 1
    x = 0.5 * (a + b)
    return x, fun(x), nfev + 1


def fit_damping(t, phi_data, mp, phi0=None, rtol=1e-6, max_widen=3):
    """Joint damping σ whose simulated release matches the data's fitted decay rate.

    σ*_d = fitDS(data); then σ minimises (σ*_d - fitDS(rollout(σ)))², searched by
    golden section on [0, 10σ*_d·s], where s = k/(ω_n²·1 N·m·s) converts the
    fitted decay rate into joint-damping units. The interval widens tenfold
    (up to ``max_widen`` times) when the minimum sits on its upper edge.
    """
    t = np.asarray(t, dtype=float)
    phi_data = np.asarray(phi_data, dtype=float)
    fit_d = fit_damped_sinusoid(t, phi_data)
    target = fit_d.sigma_star
    dt = float(np.median(np.diff(t)))
    duration = t[-1] - t[0]
    phi0 = phi_data[0] if phi0 is None else phi0
    history = []

    def model_rate(sigma):
        tm, pm = release_trace(mp, phi0, duration, dt, sigma=sigma)
        try:
            return fit_damped_sinusoid(tm, pm).sigma_star
        except UnfittableError:
            return np.inf

    def objective(sigma):
        r = model_rate(sigma)
        val = (target - r) ** 2 if np.isfinite(r) else 1e6 * (1 + sigma)
        history.append({"sigma": sigma, "sigma_star_model": r, "objective": val})
        return val

    # modal estimate: a stiffness-proportional damper gives σ* ≈ σ ω_n² / (2k)
    hi = max(10.0 * target * 2.0 * mp.k / fit_d.omega_n**2, 1e-12)
    lo = 0.0
    evaluations = 0
    for _ in range(max_widen + 1):
        tol = rtol * hi + 1e-15
        sigma, _, nfev = golden_section(objective, lo, hi, tol)
        evaluations += nfev
        if sigma < hi - 10 * tol:
            return DampingFitResult(sigma=float(sigma), sigma_star_data=target,
                                    sigma_star_model=float(model_rate(sigma)), evaluations=evaluations,
                                    interval=(lo, hi), history=history)
        lo, hi = hi * 0.5, hi * 10.0
    raise ConvergenceError("damping search did not bracket a minimum", history)


# ---------------------------------------------------------------- thermal fit


@dataclass
class ThermalFitResult:
    side: str
    a1: float
    a2: float
    a3: float
    b: float
    phi_eq_star: float
    V_eq_star: float
    stage1: dict
    stage1_residual: float
    refined_residual: float

    def params(self, beta, T0):
        return ThermalParams(a1=self.a1, a2=self.a2, a3=self.a3, beta=beta, T0=T0)

    def to_dict(self):
        return asdict(self)


def _window(dt, seconds, minimum=5):
    w = max(int(round(seconds / dt)), minimum)
    return w + 1 - w % 2


def most_promising_point(dataset, side, T0, window_s=2.0, vdot_tol=0.05, tie_tol=0.01):
    """Index of the near-equilibrium sample used to scale φ into wire temperature.

    argmin of the window-smoothed |V̇| among samples bent toward ``side``;
    samples within ``tie_tol`` °C/s of the minimum are tie-broken by larger |φ|.
    """
    dt = dataset.dt
    w = _window(dt, window_s)
    V = dataset.V(side)
    Vdot = savgol_filter(V, w, 2, deriv=1, delta=dt)
    phi_s = savgol_filter(dataset.phi, w, 2)
    sign = -1.0 if side == "left" else 1.0
    bent = sign * phi_s
    cand = np.flatnonzero((bent >= max(math.radians(5.0), 0.2 * bent.max())) & (V - T0 > 2.0))
    if cand.size == 0:
        raise DatasetInsufficientError("no bent, heated samples to anchor the temperature scale")
    score = np.abs(Vdot[cand])
    best = score.min()
    if best > vdot_tol:
        raise DatasetInsufficientError(f"no near-equilibrium point: min |dV/dt| = {best:.3g} °C/s")
    ties = cand[score <= best + tie_tol]
    return int(ties[np.argmax(bent[ties])]), phi_s, savgol_filter(V, w, 2)


def thermal_residual(params, D, dt, V, T_init, V_init):
    _, Vs = simulate_thermal(D[:-1], dt, params, T_init=T_init, V_init=V_init)
    return Vs - V


def fit_thermal_params(dataset, side, T0, max_knots=600):
    """Two-stage estimate of (a1, a2, a3) for one actuator from a single-sided log.

    Stage one reconstructs the wire temperature as T = bφ + T0, smooths T and
    V with smoothing splines (GCV-chosen penalty), and regresses the ODE
    coefficients on the spline derivatives. Stage two refines all three by
    simulating the linear (T, V) system under the logged duty cycle and
    minimising the squared error against measured V.
    """
    if side not in ("left", "right"):
        raise InvalidArgumentError("side must be 'left' or 'right'")
    other = dataset.D("right" if side == "left" else "left")
    if np.any(other != 0):
        raise InvalidArgumentError("thermal calibration needs a single-sided dataset")
    t = dataset.t - dataset.t[0]
    dt = dataset.dt
    V = dataset.V(side)
    D = dataset.D(side)
    idx, phi_s, V_s = most_promising_point(dataset, side, T0)
    phi_star, V_star = float(phi_s[idx]), float(V_s[idx])
    b = (V_star - T0) / phi_star
    T_approx = b * dataset.phi + T0

    # GCV cost grows quickly with length; the thermal time scales are seconds,
    # so the splines are fitted on a decimated grid (<= max_knots samples).
    step = max(1, int(math.ceil(t.size / max_knots)))
    spl_T = make_smoothing_spline(t[::step], T_approx[::step])
    spl_V = make_smoothing_spline(t[::step], V[::step])
    Ts, Tds = spl_T(t), spl_T.derivative()(t)
    Vs, Vds = spl_V(t), spl_V.derivative()(t)
    (a1, a2), *_ = np.linalg.lstsq(np.column_stack([Ts - T0, D]), Tds, rcond=None)
    gap = Ts - Vs
    a3 = float(gap @ Vds / (gap @ gap))
    stage1 = {"a1": float(a1), "a2": float(a2), "a3": a3}
    if not (a1 < 0 and a2 > 0 and a3 > 0):
        raise DatasetInsufficientError(f"stage-one collocation gave unphysical signs: {stage1}")

    T_init = V_init = float(V_s[0])

    def resid(z):
        p = ThermalParams(a1=-math.exp(z[0]), a2=math.exp(z[1]), a3=math.exp(z[2]), beta=1.0, T0=T0)
        return thermal_residual(p, D, dt, V, T_init, V_init)

    z0 = np.log([-a1, a2, a3])
    r0 = resid(z0)
    sol = least_squares(resid, z0, method="lm", xtol=1e-12, ftol=1e-12)
    stage1_res = float(np.sqrt(np.mean(r0**2)))
    refined_res = float(np.sqrt(np.mean(sol.fun**2)))
    z = sol.x
    if refined_res > stage1_res:
        z, refined_res = z0, stage1_res
    return ThermalFitResult(side=side, a1=-math.exp(z[0]), a2=math.exp(z[1]), a3=math.exp(z[2]),
                            b=float(b), phi_eq_star=phi_star, V_eq_star=V_star, stage1=stage1,
                            stage1_residual=stage1_res, refined_residual=refined_res)


# ------------------------------------------------------------------ force fit


@dataclass
class ForceFitResult:
    side: str
    beta: float
    count: int
    gamma: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def force_coeff_lstsq(gamma):
    """β = 1 \\ Γ over distinct observations.

    Exact duplicates are collapsed first, so repeating an observation leaves β
    unchanged.
    """
    g = np.unique(np.asarray(gamma, dtype=float))
    return float(np.linalg.lstsq(np.ones((g.size, 1)), g, rcond=None)[0][0])


def quasi_static_points(phi, dt, rate_tol=math.radians(0.5), window_s=1.0):
    """Centre indices of contiguous runs where the smoothed |φ̇| stays below ``rate_tol``."""
    w = _window(dt, window_s)
    phidot = savgol_filter(phi, w, 2, deriv=1, delta=dt)
    still = np.abs(phidot) <= rate_tol
    edges = np.flatnonzero(np.diff(np.concatenate([[0], still.astype(int), [0]])))
    runs = edges.reshape(-1, 2)
    return np.array([(a + b - 1) // 2 for a, b in runs], dtype=int), phidot


def fit_force_coeffs(dataset, side, thermal, k, n, window_s=0.5, min_heat=2.0):
    """Force gain β for one actuator from the quasi-static points of a single-sided log.

    Wire temperature is re-simulated from the logged duty with the calibrated
    thermal model; at each quasi-static run centre the temperature and bend
    angle are averaged over ±``window_s`` and turned into Γ = kθ/(T - T0)
    with θ = 2φ/(n+1).
    """
    if side not in ("left", "right"):
        raise InvalidArgumentError("side must be 'left' or 'right'")
    dt = dataset.dt
    V = dataset.V(side)
    D = dataset.D(side)
    T, _ = simulate_thermal(D[:-1], dt, thermal, T_init=V[0], V_init=V[0])
    centres, _ = quasi_static_points(dataset.phi, dt)
    half = int(round(window_s / dt))
    sign = -1.0 if side == "left" else 1.0
    gamma = []
    for c in centres:
        sl = slice(max(c - half, 0), min(c + half + 1, len(dataset)))
        T_eq = float(np.mean(T[sl]))
        if T_eq - thermal.T0 < min_heat:
            continue
        theta_eq = float(theta_from_phi_cc(np.mean(dataset.phi[sl]), n)[0])
        gamma.append(sign * k * theta_eq / (T_eq - thermal.T0))
    if len(gamma) < 3:
        raise DatasetInsufficientError(f"only {len(gamma)} quasi-static heated points (need 3)")
    return ForceFitResult(side=side, beta=force_coeff_lstsq(gamma), count=len(gamma), gamma=gamma)


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    t: np.ndarray
    phi_data: np.ndarray
    phi_model: np.ndarray
    error: np.ndarray
    rms: float
    mean_abs: float
    max_abs: float

    def summary(self):
        return {"rms_deg": math.degrees(self.rms), "mean_abs_deg": math.degrees(self.mean_abs),
                "max_abs_deg": math.degrees(self.max_abs), "samples": int(self.t.size)}


def validate_model(dataset, params, dt_integration=0.01):
    """Open-loop rollout driven by the logged duty cycles, compared with logged φ."""
    if len(dataset) < 2:
        raise InvalidArgumentError("validation dataset is empty")
    cfg = SimConfig(dt_integration=dt_integration, dt_sample=dataset.dt)
    x0 = ambient_state(params, theta=theta_from_phi_cc(dataset.phi[0], params.n))
    x0[params.n:params.n + 2] = [dataset.V_l[0], dataset.V_r[0]]
    r = rollout(x0, dataset.D_seq[:-1], cfg, params)
    err = r.phi - dataset.phi
    return ValidationReport(t=dataset.t, phi_data=dataset.phi, phi_model=r.phi, error=err,
                            rms=float(np.sqrt(np.mean(err**2))), mean_abs=float(np.mean(np.abs(err))),
                            max_abs=float(np.max(np.abs(err))))


# ------------------------------------------------------------------ pipeline


@dataclass
class Campaign:
    """Everything measured on one limb: gravity sag, a release trace and three PI logs."""

    phi_gravity: np.ndarray
    release_t: np.ndarray
    release_phi: np.ndarray
    datasets: dict


def synthetic_campaign(params, cfg, seed=0, setpoints=6, dwell=60.0, release_phi0=math.radians(45.0),
                       release_duration=6.0, noise_phi=0.0, noise_V=0.0, gravity_readings=5):
    """Simulate the calibration experiments on ``params`` (the ground truth).

    Noise levels are standard deviations: ``noise_phi`` in rad on logged bend
    angles, ``noise_V`` in °C on logged thermocouple readings. The gravity
    sag is read ``gravity_readings`` times.
    """
    from .simcore import generate_calibration_dataset, random_schedule

    rng = np.random.default_rng(seed)
    mp_g = params.manip.replace(gravity_on=True)
    phi_g = np.full(gravity_readings, float(tip_bend_angle(static_equilibrium(mp_g), mp_g)))
    t_rel, phi_rel = release_trace(params.manip, release_phi0, release_duration, cfg.dt_integration)
    phi_g = phi_g + noise_phi * rng.standard_normal(phi_g.shape)
    phi_rel = phi_rel + noise_phi * rng.standard_normal(phi_rel.shape)
    datasets = {}
    for i, kind in enumerate(("right", "left", "mixed")):
        schedule = random_schedule(kind, setpoints, rng)
        datasets[kind] = generate_calibration_dataset(
            kind, schedule, dwell, cfg, params, seed=seed * 7 + i + 1,
            noise_phi=noise_phi, noise_V=noise_V)
    return Campaign(phi_gravity=phi_g, release_t=t_rel, release_phi=phi_rel, datasets=datasets)


def calibrate_all(campaign, geometry, T0):
    """Run the four procedures in order; returns (LimbParams, report dict).

    ``geometry`` is a ManipulatorParams carrying the measured lengths, masses
    and inertias; its k and σ are ignored.
    """
    mp = geometry.replace(gravity_on=True)
    spring = fit_spring_constant(campaign.phi_gravity, mp)
    mp = mp.replace(k=spring.k, gravity_on=False)
    damping = fit_damping(campaign.release_t, campaign.release_phi, mp)
    mp = mp.replace(sigma=damping.sigma)
    report = {"spring": spring.to_dict(), "damping": damping.to_dict()}
    sides = {}
    for side in ("left", "right"):
        data = campaign.datasets[side]
        thermal = fit_thermal_params(data, side, T0)
        tp = thermal.params(beta=1.0, T0=T0)
        force = fit_force_coeffs(data, side, tp, spring.k, mp.n)
        sides[side] = thermal.params(beta=force.beta, T0=T0)
        report[f"thermal_{side}"] = thermal.to_dict()
        report[f"force_{side}"] = force.to_dict()
    report["damping"].pop("history")
    params = LimbParams(manip=mp, left=sides["left"], right=sides["right"])
    if "mixed" in campaign.datasets:
        report["validation"] = validate_model(campaign.datasets["mixed"], params).summary()
    return params, report
