import json

import pytest

from gritquit.boundary import Boundary
from gritquit.cli import main


def _run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_solve_writes_files(tmp_path):
    code, out = _run(tmp_path, "a", "solve")
    assert code == 0
    for f in ("boundary.csv", "boundary.json", "manifest.json"):
        assert (out / f).exists()
    b = Boundary.from_json((out / "boundary.json").read_text())
    assert Boundary.from_csv((out / "boundary.csv").read_text(), b.m0, b.m1).to_csv() == (out / "boundary.csv").read_text()
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "solve" and set(man["artifacts"]) == {"boundary.csv", "boundary.json", "manifest.json"}
    assert man["metadata"]["m1"] == b.m1 and man["config"]["mu"] == 1.0


def test_solve_deterministic(tmp_path):
    _, a = _run(tmp_path, "a", "solve")
    _, b = _run(tmp_path, "b", "solve")
    assert (a / "boundary.csv").read_bytes() == (b / "boundary.csv").read_bytes()
    assert (a / "boundary.json").read_bytes() == (b / "boundary.json").read_bytes()


def test_invalid_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("R = 3\nL = 2\n")
    code, _ = _run(tmp_path, "a", "solve", "--config", str(cfg))
    assert code == 2
    assert "OrderingViolation" in capsys.readouterr().err


def test_numeric_failure_exit_3(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"profit.peak_value": 2.05}))
    code, _ = _run(tmp_path, "a", "solve", "--config", str(cfg))
    assert code == 3
    assert "NoLaunchRegion" in capsys.readouterr().err


def test_flag_overrides_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("grid_step = 0.0125\nmu = 1.0\n")
    _, out = _run(tmp_path, "a", "solve", "--config", str(cfg), "--grid-step", "0.005")
    man = json.loads((out / "manifest.json").read_text())
    assert man["metadata"]["grid_step"] == 0.005
    _, out = _run(tmp_path, "b", "solve", "--config", str(cfg))
    assert json.loads((out / "manifest.json").read_text())["metadata"]["grid_step"] == 0.0125
    assert cfg.read_text() == "grid_step = 0.0125\nmu = 1.0\n"


def test_manifest_reproduces(tmp_path):
    _, a = _run(tmp_path, "a", "simulate", "--paths", "300", "--seed", "4", "--per-path")
    _, b = _run(tmp_path, "b", "simulate", "--config", str(a / "manifest.json"), "--per-path")
    for f in ("sim_stats.json", "paths.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_value_surface(tmp_path):
    _, a = _run(tmp_path, "a", "solve")
    code, out = _run(tmp_path, "v", "value", "--boundary", str(a / "boundary.json"), "--m-res", "9", "--z-res", "4")
    assert code == 0
    lines = (out / "value_surface.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 36


def test_bad_sim_option(tmp_path):
    code, _ = _run(tmp_path, "a", "simulate", "--dt", "0.5")
    assert code == 2


def test_sweep_command(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("mu = 0.3\nr = 1.0\nprofit.qbar = 5.0\n")
    code, out = _run(tmp_path, "a", "sweep", "--config", str(cfg), "--param", "R")
    assert code == 0
    rep = json.loads((out / "sweep.json").read_text())
    assert rep["passed"] and rep["parameter"] == "R"


def test_verify_reports_failures(tmp_path, monkeypatch):
    from gritquit import verify

    def fake_run_all(*a, **kw):
        return verify.VerifyReport([verify.CheckResult("x", True), verify.CheckResult("y", False)])

    monkeypatch.setattr(verify, "run_all", fake_run_all)
    code, out = _run(tmp_path, "a", "verify", "--paths", "10")
    assert code == 1
    assert json.loads((out / "verify_report.json").read_text())["passed"] is False
