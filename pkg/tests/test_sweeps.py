import json
import warnings

import pytest

from gritquit.model import BENCHMARK_PARAMS, BENCHMARK_PROFIT, STAGED_PARAMS, STAGED_PROFIT
from gritquit.sweeps import StageMissing, convergence_study, perturb, sweep


@pytest.fixture(scope="module")
def reports():
    return {w: sweep(STAGED_PARAMS, STAGED_PROFIT, w) for w in ("R", "L", "qbar")}


def test_restart_cost_signs(reports):
    rep = reports["R"]
    for q in ("m0", "z_star_m0", "Iteration", "FinalPush", "Exploration", "viability"):
        assert rep.check(q).outcome == "pass", q
    assert rep.stage_shifts["FinalPush"].lo == 0.0 == rep.stage_shifts["FinalPush"].hi
    assert rep.passed


def test_launch_cost_signs(reports):
    rep = reports["L"]
    for q in ("m0", "z_star_m0", "FinalPush", "Exploration", "viability"):
        assert rep.check(q).outcome == "pass", q
    assert abs(rep.cutoff_deltas["z_star_m0"]) < rep.threshold
    for q in ("m1", "z_star_m1", "Iteration"):
        assert rep.check(q).outcome == "unchecked"


def test_qbar_signs(reports):
    rep = reports["qbar"]
    for q in ("Iteration", "Exploration", "viability"):
        assert rep.check(q).outcome == "pass", q
    assert rep.check("m0").outcome == "unchecked"
    # measured: m0 falls as qbar rises (with pi(0) held fixed)
    assert rep.cutoff_deltas["m0"] < 0


def test_qbar_final_push_shift_changes_sign(reports):
    # negative next to the peak, positive next to m1: the uniform sign is not attained
    s = reports["qbar"].stage_shifts["FinalPush"]
    assert s.lo < 0 < s.hi
    assert reports["qbar"].check("FinalPush").outcome == "fail"


def test_antisymmetry(reports):
    for rep in reports.values():
        assert all(v in ("ok", "indistinguishable") for v in rep.antisymmetry.values()), rep.parameter


def test_richardson_confirms(reports):
    for rep in reports.values():
        for c in rep.checks:
            if c.outcome == "pass" and c.expected in "+-":
                assert c.confirmed


def test_stage_missing_on_benchmark():
    with pytest.warns(StageMissing):
        rep = sweep(BENCHMARK_PARAMS, BENCHMARK_PROFIT, "R")
    assert "StageMissing" in rep.flags
    assert rep.check("m0").outcome == "skipped" and rep.check("Exploration").outcome == "skipped"
    assert rep.check("FinalPush").outcome == "pass"
    assert rep.stage_shifts["FinalPush"].hi == 0.0


def test_convergence_of_difference_quotient():
    (h1, d1), (h2, d2), (h3, d3) = convergence_study(STAGED_PARAMS, STAGED_PROFIT, "R")
    assert d1 > 0 and d2 > 0 and d3 > 0
    assert abs(d3 - d2) < abs(d2 - d1)
    assert abs(d3 - d2) / abs(d2 - d1) == pytest.approx(0.5, abs=0.1)


def test_report_serialization(reports):
    rep = reports["L"]
    d = json.loads(rep.to_json())
    assert d["parameter"] == "L" and d["passed"] == rep.passed
    assert "Exploration" in rep.table()
    assert sweep(STAGED_PARAMS, STAGED_PROFIT, "L").to_json() == rep.to_json()


def test_perturb_rejects_unknown():
    with pytest.raises(ValueError):
        perturb(STAGED_PARAMS, STAGED_PROFIT, "mu", 0.01)
