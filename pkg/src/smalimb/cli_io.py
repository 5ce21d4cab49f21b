"""Command-line front end and file formats.

Exit codes: 0 success, 2 bad input (config, missing/ill-formed files),
3 numerical failure inside a module. Every command that writes artifacts
also writes one ``manifest.json`` next to them.
"""

import argparse
import copy
import csv
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import Campaign, calibrate_all, synthetic_campaign, validate_model
from .config import default_limb
from .errors import InvalidArgumentError, SmalimbError
from .simcore import (
    CalibrationDataset,
    LimbParams,
    SimConfig,
    ambient_state,
    bend_angles,
    rollout,
    wire_temperatures,
    write_table,
)
from . import trajopt

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(InvalidArgumentError):
    """Bad user input; maps to exit code 2."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}

TRAJOPT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "references": {"type": "array", "minItems": 1,
                       "items": {"enum": ["hand", "smooth", "ramps", "csv"]}},
        "reference_csv": {"type": ["string", "null"]},
        "duration": _pos,
        "dt_knot": _pos,
        "T_max": _num,
        "T_warm": {"type": ["number", "null"]},
        "t_warm": {"type": "number", "minimum": 0},
        "Q_theta": {"type": "number", "minimum": 0},
        "R": {"type": "number", "minimum": 0},
        "terminal_factor": {"type": "number", "minimum": 0},
        "max_outer": {"type": "integer", "minimum": 1},
        "u_guess": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1},
                    "minItems": 2, "maxItems": 2},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "limb": {"type": "object", "required": ["manip", "left", "right"]},
        "sim": {"type": "object", "additionalProperties": False,
                "properties": {"dt_integration": _pos, "dt_sample": _pos}},
        "campaign": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "setpoints": {"type": "integer", "minimum": 3},
                "dwell": _pos,
                "noise_phi_deg": {"type": "number", "minimum": 0},
                "noise_V": {"type": "number", "minimum": 0},
                "release_phi0_deg": _num,
                "release_duration": _pos,
                "gravity_readings": {"type": "integer", "minimum": 1},
            },
        },
        "trajopt": TRAJOPT_SCHEMA,
    },
}

DEFAULT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "sim": {"dt_integration": 0.01, "dt_sample": 0.1},
    "campaign": {"setpoints": 6, "dwell": 60.0, "noise_phi_deg": 0.2, "noise_V": 0.2,
                 "release_phi0_deg": 45.0, "release_duration": 6.0, "gravity_readings": 5},
    "trajopt": {"references": ["hand"], "reference_csv": None, "duration": 50.0, "dt_knot": 0.1,
                "T_max": 100.0, "T_warm": 45.0, "t_warm": 20.0, "Q_theta": 100.0, "R": 2.0,
                "terminal_factor": 1000.0, "max_outer": 25, "u_guess": [0.25, 0.25]},
}


# ------------------------------------------------------------------ config

def _line_of(text, path):
    """Best-effort line number of a JSON path, found by scanning for its keys in order."""
    pos = 0
    for key in path:
        if isinstance(key, str):
            hit = text.find(json.dumps(key), pos)
            if hit < 0:
                break
            pos = hit
    return text.count("\n", 0, pos) + 1


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None):
    """Parse, validate and default-fill a run config. Errors name the offending line."""
    import jsonschema

    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: config file not found")
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.path)))
    if errors:
        lines = [f"{path}:{_line_of(text, list(e.path))}: {'/'.join(map(str, e.path)) or '<root>'}: {e.message}"
                 for e in errors]
        raise InputError("config schema violation\n" + "\n".join(lines))
    cfg = _merge(DEFAULT_CONFIG, raw)
    if "limb" in raw:
        try:
            LimbParams.from_dict(raw["limb"])
        except (TypeError, KeyError, InvalidArgumentError) as exc:
            raise InputError(f"{path}:{_line_of(text, ['limb'])}: limb: {exc}") from exc
    try:
        SimConfig(**cfg["sim"])
    except InvalidArgumentError as exc:
        raise InputError(f"{path}:{_line_of(text, ['sim'])}: sim: {exc}") from exc
    return cfg


def limb_from_config(cfg):
    return LimbParams.from_dict(cfg["limb"]) if "limb" in cfg else default_limb()


def sim_from_config(cfg):
    return SimConfig(**cfg["sim"])


def write_params(path, params, extra=None):
    doc = {"format": "smalimb.params", "version": SCHEMA_VERSION, "limb": params.to_dict()}
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_params(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: parameter file not found")
    try:
        doc = json.loads(path.read_text())
        return LimbParams.from_dict(doc["limb"])
    except (json.JSONDecodeError, KeyError, TypeError, InvalidArgumentError) as exc:
        raise InputError(f"{path}: not a parameter file ({exc})") from exc


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"cannot serialise {type(v)}")


def read_table(path, header=None):
    """Numeric CSV with a header row; returns (header, 2-D array)."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: file not found")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or (header is not None and rows[0] != list(header)):
        raise InputError(f"{path}: expected header {','.join(header or [])}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return rows[0], data.reshape(-1, len(rows[0]))


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Output directory plus the manifest describing one command invocation."""

    def __init__(self, command, args, cfg, inputs=()):
        self.command = command
        self.out = Path(args.out_dir)
        self.cfg = cfg
        self.inputs = {str(p): _sha256(p) for p in inputs}
        self.outputs = []
        self.started = datetime.now(timezone.utc).isoformat()
        self.args = {k: v for k, v in vars(args).items() if k not in ("func", "out_dir", "config")}

    def path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return self.out / name

    def finish(self):
        blob = json.dumps(self.cfg, sort_keys=True).encode()
        manifest = {
            "command": self.command, "args": self.args, "config": self.cfg,
            "config_sha256": hashlib.sha256(blob).hexdigest(), "seed": self.cfg.get("seed"),
            "inputs": self.inputs, "version": __version__, "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "outputs": {n: _sha256(self.out / n) for n in sorted(set(self.outputs))},
        }
        self.out.mkdir(parents=True, exist_ok=True)
        _write_json(self.out / "manifest.json", manifest)


def _require(*paths):
    for p in paths:
        if p is not None and not Path(p).exists():
            raise InputError(f"{p}: file not found")


# ------------------------------------------------------------------ helpers

def write_trajectory_csv(path, t, X, U, params):
    """Simulation/rollout trace: angles in degrees, last row has no input."""
    n = params.n
    phi = bend_angles(X, params)
    T = wire_temperatures(X, params)
    u = np.vstack([U, np.full((1, 2), np.nan)])
    write_table(path, ["t", "phi", *[f"theta_{i + 1}" for i in range(n)], "V_l", "V_r", "T_l", "T_r",
                       "D_l", "D_r"],
                [t, np.rad2deg(phi), np.rad2deg(X[:, :n]), X[:, n:n + 2], T, u])


def write_campaign(campaign, run):
    _write_json(run.path("gravity.json"), {"phi_deg": np.rad2deg(campaign.phi_gravity).tolist()})
    write_table(run.path("release.csv"), ["t", "phi"],
                [campaign.release_t, np.rad2deg(campaign.release_phi)])
    for kind, ds in campaign.datasets.items():
        ds.write_csv(run.path(f"dataset_{kind}.csv"))


def campaign_files(data_dir):
    d = Path(data_dir)
    return [d / "gravity.json", d / "release.csv",
            *[d / f"dataset_{k}.csv" for k in ("right", "left", "mixed")]]


def read_campaign(data_dir):
    files = campaign_files(data_dir)
    _require(*files)
    try:
        phi_g = np.deg2rad(np.asarray(json.loads(files[0].read_text())["phi_deg"], dtype=float))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{files[0]}: {exc}") from exc
    _, rel = read_table(files[1], ["t", "phi"])
    datasets = {k: CalibrationDataset.read_csv(f, kind=k)
                for k, f in zip(("right", "left", "mixed"), files[2:])}
    return Campaign(phi_gravity=np.atleast_1d(phi_g), release_t=rel[:, 0],
                    release_phi=np.deg2rad(rel[:, 1]), datasets=datasets)


def reference_trace(kind, tcfg, seed, csv_path=None):
    """(t_knots, φ_ref) on the knot grid for a named reference."""
    dt = tcfg["dt_knot"]
    duration = tcfg["duration"]
    t_knots = dt * np.arange(int(round(duration / dt)) + 1)
    if kind == "hand":
        t, phi = trajopt.hand_reference(duration, dt)
    elif kind in ("smooth", "ramps"):
        t, phi = trajopt.synthetic_teach_trace(kind, duration, seed=seed)
    elif kind == "csv":
        path = csv_path or tcfg.get("reference_csv")
        if not path:
            raise InputError("reference 'csv' needs reference_csv")
        t, phi = trajopt.read_teach_csv(path)
        t = t - t[0]
        if t[-1] < duration - 1e-9:
            t_knots = dt * np.arange(int(math.floor(t[-1] / dt + 1e-9)) + 1)
    else:
        raise InputError(f"unknown reference {kind!r}")
    return t_knots, trajopt.resample(t, phi, t_knots)


def _ref_name(kind):
    return "teach" if kind == "csv" else kind


def make_problem(params, sim, tcfg, phi_ref):
    n, nx = params.n, params.nx
    Q = np.zeros(nx)
    Q[:n] = tcfg["Q_theta"]
    return trajopt.problem_from_phi(
        phi_ref, params, dt_knot=tcfg["dt_knot"], dt_integration=sim.dt_integration,
        Q=Q, R=np.full(2, tcfg["R"]), Q_N=tcfg["terminal_factor"] * Q,
        T_max=tcfg["T_max"], T_warm=tcfg["T_warm"], t_warm=tcfg["t_warm"])


def optimize_reference(params, sim, tcfg, phi_ref):
    if abs(tcfg["dt_knot"] - sim.dt_sample) > 1e-12:
        raise InputError("trajopt.dt_knot must equal sim.dt_sample")
    pb = make_problem(params, sim, tcfg, phi_ref)
    opts = trajopt.SolverOptions(max_outer=tcfg["max_outer"], u_guess=tuple(tcfg["u_guess"]))
    sol = trajopt.solve(pb, opts)
    return pb, sol


def stats_table(rows):
    """Plain-text table in the mean / median / 90th-percentile layout."""
    lines = [f"{'trajectory':<16}{'mean':>10}{'median':>10}{'p90':>10}   (|phi error|, deg)"]
    for name, s in rows.items():
        lines.append(f"{name:<16}{s['mean']:>10.3f}{s['median']:>10.3f}{s['p90']:>10.3f}")
    return "\n".join(lines) + "\n"


def _repeat(run, name, params_plan, plant, sim, tcfg, phi_ref):
    """Optimise against the plan model, replay open loop on the plant, write artifacts."""
    pb, sol = optimize_reference(params_plan, sim, tcfg, phi_ref)
    sol.write_csv(run.path(f"solution_{name}.csv"), params_plan.n)
    check = trajopt.check_solution(sol, pb)
    r = rollout(pb.x_init, sol.u_star, sim, plant)
    write_table(run.path(f"rollout_{name}.csv"), ["t", "phi_ref", "phi_star", "phi_rollout"],
                [pb.t, np.rad2deg(phi_ref), np.rad2deg(sol.phi_star), np.rad2deg(r.phi)])
    summary = {
        "solver": sol.report(), "check": check,
        "tracking_rollout_vs_ref": trajopt.tracking_stats(r.phi, phi_ref),
        "tracking_plan_vs_ref": trajopt.tracking_stats(sol.phi_star, phi_ref),
        "rollout_vs_plan": trajopt.tracking_stats(r.phi, sol.phi_star),
    }
    _write_json(run.path(f"solution_{name}.json"), summary)
    return summary


# ------------------------------------------------------------------ commands

def cmd_simulate(args, cfg):
    params = read_params(args.params) if args.params else limb_from_config(cfg)
    sim = sim_from_config(cfg)
    inputs = [args.params] if args.params else []
    if args.inputs:
        _, data = read_table(args.inputs, ["D_l", "D_r"])
        U = data
        inputs.append(args.inputs)
    else:
        steps = int(round(args.duration / sim.dt_sample))
        U = np.tile(np.asarray(args.duty, dtype=float), (steps, 1))
    if U.size == 0 or np.any((U < 0) | (U > 1)):
        raise InputError("duty cycles must be in [0, 1] and non-empty")
    run = Run("simulate", args, cfg, inputs)
    r = rollout(ambient_state(params), U, sim, params)
    write_trajectory_csv(run.path("simulation.csv"), r.t, r.x, U, params)
    run.finish()


def cmd_generate(args, cfg):
    params = limb_from_config(cfg)
    c = cfg["campaign"]
    run = Run("generate-data", args, cfg)
    campaign = synthetic_campaign(
        params, sim_from_config(cfg), seed=cfg["seed"], setpoints=c["setpoints"], dwell=c["dwell"],
        release_phi0=math.radians(c["release_phi0_deg"]), release_duration=c["release_duration"],
        noise_phi=math.radians(c["noise_phi_deg"]), noise_V=c["noise_V"],
        gravity_readings=c["gravity_readings"])
    write_campaign(campaign, run)
    write_params(run.path("truth_params.json"), params)
    run.finish()
    return campaign, params


def cmd_calibrate(args, cfg):
    files = campaign_files(args.data_dir)
    _require(*files)
    campaign = read_campaign(args.data_dir)
    run = Run("calibrate", args, cfg, files)
    geometry = limb_from_config(cfg)
    params, report = calibrate_all(campaign, geometry.manip, geometry.T0)
    write_params(run.path("params.json"), params)
    _write_json(run.path("calibration_report.json"), report)
    run.finish()
    return params, report


def cmd_optimize(args, cfg):
    _require(args.params, args.problem)
    params = read_params(args.params)
    tcfg = cfg["trajopt"]
    inputs = [args.params]
    if args.problem:
        tcfg = _load_problem(args.problem, tcfg)
        inputs.append(args.problem)
    if tcfg.get("reference_csv"):
        _require(tcfg["reference_csv"])
        inputs.append(tcfg["reference_csv"])
    sim = sim_from_config(cfg)
    refs = {_ref_name(k): reference_trace(k, tcfg, cfg["seed"]) for k in tcfg["references"]}
    run = Run("optimize", args, cfg, inputs)
    report = {}
    for name, (_, phi) in refs.items():
        pb, sol = optimize_reference(params, sim, tcfg, phi)
        sol.write_csv(run.path(f"solution_{name}.csv"), params.n)
        report[name] = {"solver": sol.report(), "check": trajopt.check_solution(sol, pb),
                        "tracking_plan_vs_ref": trajopt.tracking_stats(sol.phi_star, phi)}
    _write_json(run.path("solution.json"), report)
    run.finish()


def _load_problem(path, base):
    import jsonschema

    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    errs = list(jsonschema.Draft7Validator(TRAJOPT_SCHEMA).iter_errors(doc))
    if errs:
        raise InputError("problem schema violation\n" + "\n".join(
            f"{path}:{_line_of(text, list(e.path))}: {e.message}" for e in errs))
    out = _merge(base, doc)
    if doc.get("reference_csv") and "references" not in doc:
        out["references"] = ["csv"]
    if out.get("reference_csv"):
        ref = Path(out["reference_csv"])
        out["reference_csv"] = str(ref if ref.is_absolute() else Path(path).parent / ref)
    return out


def cmd_rollout(args, cfg):
    _require(args.params, args.solution)
    params = read_params(args.params)
    sim = sim_from_config(cfg)
    t, phi_star, theta, V, T, U = trajopt.read_solution_csv(args.solution)
    if theta.shape[1] != params.n:
        raise InputError("solution and parameter file disagree on n")
    run = Run("rollout", args, cfg, [args.params, args.solution])
    r = rollout(ambient_state(params), U, sim, params)
    write_table(run.path("rollout.csv"), ["t", "phi_star", "phi_rollout"],
                [t, np.rad2deg(phi_star), np.rad2deg(r.phi)])
    _write_json(run.path("rollout.json"), trajopt.tracking_stats(r.phi, phi_star))
    run.finish()


def cmd_validate(args, cfg):
    _require(args.params, args.dataset)
    params = read_params(args.params)
    ds = CalibrationDataset.read_csv(args.dataset, kind="validation")
    run = Run("validate", args, cfg, [args.params, args.dataset])
    rep = validate_model(ds, params, sim_from_config(cfg).dt_integration)
    write_table(run.path("validation.csv"), ["t", "phi_data", "phi_model"],
                [rep.t, np.rad2deg(rep.phi_data), np.rad2deg(rep.phi_model)])
    _write_json(run.path("validation.json"), rep.summary())
    run.finish()


def cmd_teach_repeat(args, cfg):
    _require(args.params, args.teach, args.plant)
    params = read_params(args.params)
    plant = read_params(args.plant) if args.plant else params
    tcfg = dict(cfg["trajopt"], reference_csv=args.teach)
    _, phi = reference_trace("csv", tcfg, cfg["seed"])
    run = Run("teach-repeat", args, cfg, [p for p in (args.params, args.teach, args.plant) if p])
    summary = _repeat(run, "teach", params, plant, sim_from_config(cfg), tcfg, phi)
    run.path("summary.txt").write_text(stats_table({"teach": summary["tracking_rollout_vs_ref"]}))
    run.finish()


def cmd_pipeline(args, cfg):
    """generate -> calibrate -> optimize -> open-loop replay on the ground-truth limb."""
    tcfg = cfg["trajopt"]
    if "csv" in tcfg["references"]:
        _require(tcfg.get("reference_csv"))
    truth = limb_from_config(cfg)
    sim = sim_from_config(cfg)
    refs = {_ref_name(k): reference_trace(k, tcfg, cfg["seed"]) for k in tcfg["references"]}
    inputs = [tcfg["reference_csv"]] if "csv" in tcfg["references"] else []
    run = Run("pipeline", args, cfg, inputs)
    c = cfg["campaign"]
    campaign = synthetic_campaign(
        truth, sim, seed=cfg["seed"], setpoints=c["setpoints"], dwell=c["dwell"],
        release_phi0=math.radians(c["release_phi0_deg"]), release_duration=c["release_duration"],
        noise_phi=math.radians(c["noise_phi_deg"]), noise_V=c["noise_V"],
        gravity_readings=c["gravity_readings"])
    write_campaign(campaign, run)
    write_params(run.path("truth_params.json"), truth)
    params, report = calibrate_all(campaign, truth.manip, truth.T0)
    write_params(run.path("params.json"), params)
    _write_json(run.path("calibration_report.json"), report)
    rows, details = {}, {}
    for name, (_, phi) in refs.items():
        details[name] = _repeat(run, name, params, truth, sim, tcfg, phi)
        rows[name] = details[name]["tracking_rollout_vs_ref"]
    table = stats_table(rows)
    run.path("summary.txt").write_text(table)
    _write_json(run.path("summary.json"), {"tracking_deg": rows, "calibration_validation":
                                           report.get("validation"), "details": details})
    run.finish()
    print(table, end="")
    return rows


def cmd_reproduce(args, cfg):
    """Re-run the command recorded in a manifest with its stored config and arguments."""
    _require(args.manifest)
    try:
        man = json.loads(Path(args.manifest).read_text())
        command, stored, margs = man["command"], man["config"], man["args"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{args.manifest}: not a manifest ({exc})") from exc
    for path, digest in man.get("inputs", {}).items():
        _require(path)
        if _sha256(path) != digest:
            raise InputError(f"{path}: input changed since the manifest was written")
    fn = COMMANDS.get(command)
    if fn is None or fn is cmd_reproduce:
        raise InputError(f"{args.manifest}: cannot reproduce command {command!r}")
    ns = argparse.Namespace(**margs, out_dir=args.out_dir, config=None, func=fn)
    return fn(ns, stored)


# ------------------------------------------------------------------ parser

COMMANDS = {}
PATH_ARGS = ("params", "plant", "teach", "solution", "dataset", "data_dir", "problem", "inputs", "manifest")

def build_parser():
    ap = argparse.ArgumentParser(prog="smalimb", description="SMA soft-limb simulation, calibration and planning")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="run config (JSON); defaults are used when omitted")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out-dir", default="out", help="artifact directory (default: out)")
        p.set_defaults(func=fn)
        COMMANDS[name] = fn
        return p

    p = add("simulate", cmd_simulate, "open-loop simulation under a duty schedule")
    p.add_argument("--params")
    p.add_argument("--duty", type=float, nargs=2, default=(0.3, 0.0), metavar=("D_L", "D_R"))
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--inputs", help="CSV with header D_l,D_r, one row per sample")
    add("generate-data", cmd_generate, "synthetic calibration campaign")
    p = add("calibrate", cmd_calibrate, "identify k, sigma, thermal and force parameters")
    p.add_argument("--data-dir", required=True)
    p = add("optimize", cmd_optimize, "solve the trajectory optimisation problem")
    p.add_argument("--params", required=True)
    p.add_argument("--problem", help="problem JSON (trajopt section format)")
    p = add("rollout", cmd_rollout, "open-loop replay of a solution")
    p.add_argument("--params", required=True)
    p.add_argument("--solution", required=True)
    p = add("validate", cmd_validate, "compare a model against a logged dataset")
    p.add_argument("--params", required=True)
    p.add_argument("--dataset", required=True)
    p = add("teach-repeat", cmd_teach_repeat, "optimise and replay a taught bend trace")
    p.add_argument("--params", required=True)
    p.add_argument("--teach", required=True, help="CSV with header t,phi (degrees)")
    p.add_argument("--plant", help="parameters of the limb the plan is replayed on")
    add("pipeline", cmd_pipeline, "generate, calibrate, optimise and replay end to end")
    p = add("reproduce", cmd_reproduce, "re-run the command recorded in a manifest")
    p.add_argument("--manifest", required=True)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    for name in PATH_ARGS:
        if getattr(args, name, None):
            setattr(args, name, str(Path(getattr(args, name)).resolve()))
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.config:
            _require(args.config)
        args.func(args, cfg)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SmalimbError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
