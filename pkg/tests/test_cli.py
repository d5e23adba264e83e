import json
import math

import pytest

from hylgas.cli import main
from hylgas.thermo import ModelParams, critical_density


def run_cli(args):
    try:
        return main(args)
    except SystemExit as exc:  # argparse uses SystemExit for usage errors
        return exc.code


def test_phase_diagram_two_point_grid(tmp_path, capsys):
    out = tmp_path / "pd.csv"
    code = run_cli(["phase-diagram", "--d", "3", "--b", "1", "--grid", "0.1:0.25:2",
                    "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "rho,rho_bar,bulk_density,branch"
    assert len(lines) == 3


def test_phase_diagram_shows_jump(tmp_path):
    rc = critical_density(ModelParams(d=3))
    out = tmp_path / "pd.csv"
    assert run_cli(["phase-diagram", "--d", "3", "--b", "1",
                    "--grid", f"{0.5 * rc}:{1.5 * rc}:41", "--out", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text().strip().splitlines()[1:]]
    rho_bar = [float(r[1]) for r in rows]
    assert rho_bar[0] == 0.0
    assert rho_bar[-1] > 0.05
    jumps = max(b - a for a, b in zip(rho_bar, rho_bar[1:]))
    assert jumps > 0.01  # discontinuous onset for d=3


def test_phase_diagram_gc_variant(tmp_path):
    out = tmp_path / "gc.csv"
    assert run_cli(["phase-diagram", "--ensemble", "gc", "--d", "3", "--a", "2", "--b", "1",
                    "--grid=-1:1:5", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "mu,rho_gc,rho_bar,bulk_density"
    vals = [float(line.split(",")[1]) for line in lines[1:]]
    assert all(b > a for a, b in zip(vals, vals[1:]))  # rho_gc increasing in mu


def test_json_output_carries_schema_and_config(tmp_path):
    out = tmp_path / "pd.json"
    assert run_cli(["phase-diagram", "--d", "3", "--b", "1", "--grid", "0.1:0.2:2",
                    "--output", "json", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["schema_version"] == "1"
    assert payload["config"]["d"] == 3
    assert payload["config"]["grid"] == "0.1:0.2:2"
    assert len(payload["rows"]) == 2


def test_deterministic_outputs_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["simulate", "--ensemble", "canonical", "--d", "3", "--b", "1", "--volume", "50",
            "--rho", "0.4", "--seed", "9", "--sweeps", "3000", "--burn-in", "500"]
    assert run_cli(args + ["--out", str(a)]) == 0
    assert run_cli(args + ["--out", str(b)]) == 0
    assert (tmp_path / "a.trace.csv").read_bytes() == (tmp_path / "b.trace.csv").read_bytes()
    ra = json.loads((tmp_path / "a.report.json").read_text())
    rb = json.loads((tmp_path / "b.report.json").read_text())
    assert ra["estimate"] == rb["estimate"]
    assert ra["schema_version"] == "1"


def test_simulate_gc_report(tmp_path):
    out = tmp_path / "gc"
    code = run_cli(["simulate", "--ensemble", "gc", "--d", "3", "--a", "2", "--b", "1",
                    "--mu", "0.5", "--volume", "100", "--seed", "3", "--sweeps", "20000",
                    "--burn-in", "2000", "--out", str(out)])
    assert code == 0
    rep = json.loads((tmp_path / "gc.report.json").read_text())
    assert rep["estimate"]["n_samples"] > 0
    assert 0.0 <= min(rep["estimate"]["acceptance_rates"].values())


def test_validate_unknown_suite_exits_2(capsys):
    assert run_cli(["validate", "bogus"]) == 2


def test_validate_missing_suite_exits_2():
    assert run_cli(["validate"]) == 2


def test_validate_pressure_gap_passes(tmp_path):
    out = tmp_path / "v.csv"
    code = run_cli(["validate", "pressure-gap", "--d", "3", "--a", "2", "--b", "1",
                    "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert "pressure-gap-witness" in text
    assert ",True" in text


def test_validate_asymptotics_passes(tmp_path):
    out = tmp_path / "v.csv"
    assert run_cli(["validate", "asymptotics", "--d", "3", "--out", str(out)]) == 0
    assert run_cli(["validate", "asymptotics", "--d", "5", "--tol", "0.05",
                    "--out", str(out)]) == 0


def test_validate_finite_volume_passes(tmp_path):
    out = tmp_path / "v.csv"
    assert run_cli(["validate", "finite-volume", "--d", "3", "--volume", "400",
                    "--out", str(out)]) == 0


def test_simulate_requires_density_flags():
    assert run_cli(["simulate", "--ensemble", "canonical", "--volume", "50"]) == 2
    assert run_cli(["simulate", "--ensemble", "gc", "--a", "2", "--b", "1"]) == 2


def test_bad_grid_exits_2():
    assert run_cli(["phase-diagram", "--grid", "1:0:5"]) == 2
    assert run_cli(["phase-diagram", "--grid", "oops"]) == 2
