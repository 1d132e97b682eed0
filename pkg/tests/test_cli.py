from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from psclab.cli import main

SMALL_VERIFY = {"verify": {"pairs": 3, "points": 12}}
SMALL_FIGURE = {"figure": {"s": [0, 1], "eps": [0, 1], "n_phi": 64, "panels": 2000}}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def report(out, command):
    return json.loads((out / f"{command}_report.json").read_text())


def failing(out, command):
    return [r for r in report(out, command)["rows"] if not r["passed"]]


def test_print_schema(capsys):
    assert main(["--print-schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert set(schema["properties"]) >= {"seed", "verify", "flow", "figure", "submersion"}


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "psclab", "--print-schema"], capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["type"] == "object"


def test_no_command_is_usage_error(capsys):
    assert main([]) == 2


def test_verify_small_config_passes(tmp_path):
    out = tmp_path / "o"
    assert main(["verify", "--config", write_cfg(tmp_path, SMALL_VERIFY), "--out", str(out), "--seed", "7"]) == 0
    rep = report(out, "verify")
    assert rep["summary"]["ok"] and rep["summary"]["failed"] == 0
    assert rep["environment"]["seed"] == 7
    assert rep["environment"]["config"]["pairs"] == 3
    names = {r["check"] for r in rep["rows"]}
    assert {"variation-formula/fd", "killing-estimate", "jet1-control", "stereographic-scal"} <= names
    with (out / "verify_report.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["check", "model", "anchor", "max_error", "threshold", "passed", "detail"]
    assert len(rows) == 1 + rep["summary"]["total"]


def test_verify_wrong_derivative_fails(tmp_path):
    cfg = {"verify": {"pairs": 1, "points": 8, "models": [{"type": "sphere"}],
                      "user_pairs": [{"name": "bad", "alpha": {"expr": "t**2", "d1": "-2*t", "d2": "2"},
                                      "beta": {"expr": "0"}}]}}
    out = tmp_path / "o"
    assert main(["verify", "--config", write_cfg(tmp_path, cfg), "--out", str(out)]) == 1
    assert [r["check"] for r in failing(out, "verify")] == ["variation-formula/bad"]


def test_verify_bad_model_is_a_failing_row(tmp_path):
    cfg = {"verify": {"pairs": 1, "points": 8, "models": [{"type": "cap", "sigma": 1.0, "rho": 5.0}]}}
    out = tmp_path / "o"
    assert main(["verify", "--config", write_cfg(tmp_path, cfg), "--out", str(out)]) == 1
    assert [r["check"] for r in failing(out, "verify")] == ["model-construction"]


def test_tol_override_tightens_analytic_check(tmp_path):
    out = tmp_path / "o"
    assert main(["verify", "--config", write_cfg(tmp_path, SMALL_VERIFY), "--out", str(out), "--tol", "1e-16"]) == 1
    assert "variation-formula/analytic" in {r["check"] for r in failing(out, "verify")}
    assert report(out, "verify")["environment"]["config"]["tol"] == 1e-16


@pytest.mark.parametrize(
    "cfg",
    [
        {"verify": {"models": []}},
        {"verify": {"bogus": 1}},
        {"verify": {"tol": 0}},
        {"flow": {"s": []}},
    ],
)
def test_config_errors_exit_2(tmp_path, cfg):
    command = next(iter(cfg))
    assert main([command, "--config", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_and_unwritable_out(tmp_path):
    assert main(["submersion", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["submersion", "--out", str(blocker / "sub")]) == 2


def test_flow_default_and_csv(tmp_path):
    out = tmp_path / "o"
    assert main(["flow", "--out", str(out)]) == 0
    checks = {r["check"] for r in report(out, "flow")["rows"]}
    assert {"flow-canonical", "flow-fixed-point", "flow-monotone", "blend-positivity"} <= checks
    header = (out / "flow" / "eps1.csv").read_text().splitlines()[0]
    assert header == "s,r,a,b,f_reconstructed,scal"


def test_flow_eps_zero_through_poles_fails(tmp_path):
    cfg = {"flow": {"eps": [0], "endpoints": "include"}}
    out = tmp_path / "o"
    assert main(["flow", "--config", write_cfg(tmp_path, cfg), "--out", str(out)]) == 1
    bad = failing(out, "flow")
    assert bad and all("ZeroKappaZeroEps" in r["detail"] for r in bad)


def test_coarse_figure_fails_circumference(tmp_path):
    cfg = {"figure": {"s": [0], "eps": [1], "n_phi": 16, "panels": 200}}
    out = tmp_path / "o"
    assert main(["figure", "--config", write_cfg(tmp_path, cfg), "--out", str(out)]) == 1
    assert "mesh-circumference" in {r["check"] for r in failing(out, "figure")}


def test_figure_small(tmp_path):
    out = tmp_path / "o"
    assert main(["figure", "--config", write_cfg(tmp_path, SMALL_FIGURE), "--out", str(out)]) == 0
    assert len(list((out / "fig_deform").rglob("*.obj"))) == 4
    assert (out / "fig_deform" / "eps1" / "s1.csv").exists()


def test_submersion_default_and_negative_tau(tmp_path):
    out = tmp_path / "o"
    assert main(["submersion", "--out", str(out)]) == 0
    with (out / "submersion_table.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["model_id", "tau_or_s", "scal", "H", "check_name", "pass"]
    assert all(r[5] == "1" for r in rows[1:])
    bad = tmp_path / "bad"
    assert main(["submersion", "--config", write_cfg(tmp_path, {"submersion": {"berger_tau": [0]}}), "--out", str(bad)]) == 1
    assert all("NonPositiveTau" in r["detail"] for r in failing(bad, "submersion"))


def test_reports_are_deterministic_and_thread_independent(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b", tmp_path / "c"]
    assert main(["submersion", "--out", str(outs[0])]) == 0
    assert main(["submersion", "--out", str(outs[1])]) == 0
    assert main(["submersion", "--out", str(outs[2]), "--jobs", "4"]) == 0
    for name in ("submersion_report.json", "submersion_report.csv", "submersion_table.csv"):
        data = [(o / name).read_bytes() for o in outs]
        assert data[0] == data[1] == data[2]
