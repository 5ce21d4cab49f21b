import json
from pathlib import Path

import numpy as np
import pytest

from smalimb import cli_io
from smalimb.cli_io import DEFAULT_CONFIG, load_config, main, read_table
from smalimb.simcore import write_table

ROOT = Path(__file__).resolve().parents[1]

SMALL = {
    "schema_version": 1,
    "seed": 3,
    "campaign": {"setpoints": 4, "dwell": 45.0},
    "trajopt": {"references": ["ramps"], "duration": 25.0, "t_warm": 10.0, "T_warm": 40.0},
}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL, indent=2))
    return path


def outputs(d):
    return sorted(p.name for p in Path(d).iterdir())


def test_default_and_bundled_configs_load():
    assert load_config() == DEFAULT_CONFIG
    cfg = load_config(ROOT / "configs" / "example.json")
    assert cfg["trajopt"]["references"] == ["hand", "smooth"]


def test_schema_violation_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "schema_version": 1,\n  "campaign": {\n    "dwell": -4\n  }\n}\n')
    assert main(["simulate", "--config", str(bad), "--out-dir", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "bad.json:4" in err and "campaign/dwell" in err
    assert not (tmp_path / "o").exists()


def test_malformed_json_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "schema_version": 1,\n  "seed": ,\n}\n')
    assert main(["generate-data", "--config", str(bad), "--out-dir", str(tmp_path / "o")]) == 2
    assert "bad.json:3" in capsys.readouterr().err


def test_unknown_key_is_rejected(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "colour": "red"}))
    assert main(["simulate", "--config", str(bad), "--out-dir", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("argv", [
    ["calibrate", "--data-dir", "missing"],
    ["validate", "--params", "missing.json", "--dataset", "missing.csv"],
    ["rollout", "--params", "missing.json", "--solution", "missing.csv"],
    ["teach-repeat", "--params", "missing.json", "--teach", "missing.csv"],
])
def test_missing_input_exits_2_without_artifacts(tmp_path, argv):
    out = tmp_path / "o"
    assert main(argv + ["--out-dir", str(out)]) == 2
    assert not out.exists()


def test_simulate_writes_manifest_and_roundtrips(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--duty", "0.5", "0.1", "--duration", "8", "--out-dir", str(out)]) == 0
    assert outputs(out) == ["manifest.json", "simulation.csv"]
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "simulate" and man["version"]
    assert set(man["outputs"]) == {"simulation.csv"}
    header, data = read_table(out / "simulation.csv")
    assert header[:3] == ["t", "phi", "theta_1"]
    assert data[-1, 1] < 0  # left wire hotter: bends negative
    write_table(tmp_path / "again.csv", header, [data])
    assert (tmp_path / "again.csv").read_bytes() == (out / "simulation.csv").read_bytes()


def test_simulate_rejects_bad_duty(tmp_path):
    assert main(["simulate", "--duty", "1.5", "0", "--out-dir", str(tmp_path / "o")]) == 2


def test_generate_calibrate_validate_chain(tmp_path, small_config):
    data, cal, val = tmp_path / "data", tmp_path / "cal", tmp_path / "val"
    assert main(["generate-data", "--config", str(small_config), "--out-dir", str(data)]) == 0
    assert "dataset_mixed.csv" in outputs(data)
    assert main(["calibrate", "--config", str(small_config), "--data-dir", str(data), "--out-dir", str(cal)]) == 0
    truth = cli_io.read_params(data / "truth_params.json")
    fitted = cli_io.read_params(cal / "params.json")
    assert fitted.manip.k == pytest.approx(truth.manip.k, rel=0.05)
    assert main(["validate", "--params", str(cal / "params.json"), "--dataset",
                 str(data / "dataset_mixed.csv"), "--out-dir", str(val)]) == 0
    rep = json.loads((val / "validation.json").read_text())
    assert rep["rms_deg"] < 1.0


def test_infeasible_problem_exits_3(tmp_path):
    params = tmp_path / "p.json"
    cli_io.write_params(params, cli_io.default_limb())
    problem = tmp_path / "prob.json"
    problem.write_text(json.dumps({"T_warm": 160.0, "T_max": 200.0, "duration": 25.0}))
    code = main(["optimize", "--params", str(params), "--problem", str(problem), "--out-dir", str(tmp_path / "o")])
    assert code == 3


def test_teach_repeat_and_rollout(tmp_path):
    from smalimb import trajopt

    params = tmp_path / "p.json"
    cli_io.write_params(params, cli_io.default_limb())
    t, phi = trajopt.synthetic_teach_trace("smooth", 24.0, seed=5)
    trajopt.write_teach_csv(tmp_path / "teach.csv", t, phi)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema_version": 1, "trajopt": {"t_warm": 10.0, "T_warm": 40.0}}))
    out = tmp_path / "tr"
    assert main(["teach-repeat", "--config", str(cfg), "--params", str(params),
                 "--teach", str(tmp_path / "teach.csv"), "--out-dir", str(out)]) == 0
    assert "mean" in (out / "summary.txt").read_text()
    rep = json.loads((out / "solution_teach.json").read_text())
    assert rep["check"]["feasible"]
    ro = tmp_path / "ro"
    assert main(["rollout", "--config", str(cfg), "--params", str(params),
                 "--solution", str(out / "solution_teach.csv"), "--out-dir", str(ro)]) == 0
    assert json.loads((ro / "rollout.json").read_text())["p90"] < 0.1


def test_pipeline_is_deterministic_and_reproducible(tmp_path, small_config):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["pipeline", "--config", str(small_config), "--out-dir", str(a)]) == 0
    assert main(["pipeline", "--config", str(small_config), "--out-dir", str(b)]) == 0
    csvs = [p.name for p in a.glob("*.csv")]
    assert len(csvs) >= 6
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    assert main(["reproduce", "--manifest", str(a / "manifest.json"), "--out-dir", str(c)]) == 0
    for name in csvs:
        assert (a / name).read_bytes() == (c / name).read_bytes(), name
    summary = json.loads((a / "summary.json").read_text())
    assert set(summary["tracking_deg"]["ramps"]) == {"mean", "median", "p90"}
    assert len(list(a.glob("manifest.json"))) == 1


def test_reproduce_refuses_changed_inputs(tmp_path):
    params = tmp_path / "p.json"
    cli_io.write_params(params, cli_io.default_limb())
    inputs = tmp_path / "u.csv"
    write_table(inputs, ["D_l", "D_r"], [np.full(20, 0.2), np.full(20, 0.4)])
    out = tmp_path / "s"
    assert main(["simulate", "--params", str(params), "--inputs", str(inputs), "--out-dir", str(out)]) == 0
    assert main(["reproduce", "--manifest", str(out / "manifest.json"), "--out-dir", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "simulation.csv").read_bytes() == (out / "simulation.csv").read_bytes()
    inputs.write_text("D_l,D_r\n0.9,0.9\n")
    assert main(["reproduce", "--manifest", str(out / "manifest.json"), "--out-dir", str(tmp_path / "x")]) == 2
