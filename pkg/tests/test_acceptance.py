"""Acceptance criteria 1-8, one pass/fail line each.

Run under pytest (lines are collected into the terminal summary) or directly
with ``python tests/test_acceptance.py``.
"""

import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from gritquit import verify
from gritquit.boundary import solve_boundary
from gritquit.cli import main as cli_main
from gritquit.maxima import hitting_probability, simulate_gamblers_ruin, viability_formula, viability_probability
from gritquit.model import BENCHMARK_PARAMS, BENCHMARK_PROFIT, STAGED_PARAMS, STAGED_PROFIT
from gritquit.sweeps import sweep

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover - direct execution outside pytest
    ACCEPTANCE_LINES = []

# pinned tolerances
VIETA_REL, ODE_REL = 1e-12, 1e-10
CUTOFF_RES, CONTINUITY, RK4_AGREE = 1e-8, 1e-6, 1e-6
MC_PATHS, MC_DT = 200_000, 1e-3
GR_PATHS, GR_DT = 100_000, 1e-3
HAND_EXPECTED, HAND_TOL = (math.e**2 - 1) / (math.e**4 - 1), 1e-6
JOINT_MASS_TOL, MARGINAL_TOL = 1e-6, 1e-8
RM_PATHS, RM_DT = 20_000, 1e-5
LIMITS = {1: 1.0, 2: 5.0, 3: 10.0, 4: 300.0, 5: 120.0, 6: 180.0, 7: 30.0}


def report(n, ok, elapsed, msg):
    limit = LIMITS.get(n)
    in_time = limit is None or elapsed < limit
    line = (f"CRITERION {n}: {'PASS' if ok and in_time else 'FAIL'}  {msg}  "
            f"[{elapsed:.1f} s{'' if limit is None else f' / {limit:.0f} s'}]")
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    assert ok, line
    assert in_time, line


def test_criterion_1_identities():
    t = time.perf_counter()
    res = verify.check_identities(n_draws=100, seed=0)
    ok = res.detail["vieta_rel"] < VIETA_REL and res.detail["ode_rel"] < ODE_REL
    report(1, ok, time.perf_counter() - t,
           f"Vieta rel {res.detail['vieta_rel']:.1e} (<{VIETA_REL:g}), g ODE rel {res.detail['ode_rel']:.1e} (<{ODE_REL:g})")


def test_criterion_2_boundary_structure():
    t = time.perf_counter()
    b = solve_boundary(BENCHMARK_PARAMS, BENCHMARK_PROFIT)
    res = verify.check_boundary(b, BENCHMARK_PARAMS, BENCHMARK_PROFIT, rk4_step=1e-5)
    d = res.detail
    rk4 = max(d["rk4_dm0"], d["rk4_dm1"], d["rk4_dz0"])
    report(2, res.passed, time.perf_counter() - t,
           f"m0={b.m0:.6g} m1={b.m1:.9g} m*={b.m_star:g} z*(0)={b.z0:.9g}; residuals "
           f"{max(d['residual_m0'], d['residual_m1']):.1e}; continuity {d['continuity']:.1e}; RK4 diff {rk4:.1e}")


@pytest.mark.parametrize("which", ["benchmark", "staged"])
def test_criterion_3_residuals(which):
    t = time.perf_counter()
    p, f = (BENCHMARK_PARAMS, BENCHMARK_PROFIT) if which == "benchmark" else (STAGED_PARAMS, STAGED_PROFIT)
    b = solve_boundary(p, f)
    res = verify.check_residuals(b, p, f)
    d = res.detail
    worst = max(v["worst_ratio"] for v in d["reflection"].values())
    report(3, res.passed, time.perf_counter() - t,
           f"[{which}] smooth pasting {d['smooth_pasting_analytic']:g}; BHJ FD ratio {d['bhj_order_ratio']:.3f}; "
           f"reflection worst/allowance {worst:.1e} over {sorted(d['reflection'])}")


@pytest.mark.slow
def test_criterion_4_monte_carlo_value():
    t = time.perf_counter()
    b = solve_boundary(BENCHMARK_PARAMS, BENCHMARK_PROFIT)
    res = verify.check_monte_carlo(b, BENCHMARK_PARAMS, BENCHMARK_PROFIT, n_paths=MC_PATHS, dt=MC_DT, seed=0)
    parts = [f"({s['z']:.3f},{s['m']:.3f}) W={s['W']:.4f} MC={s['mc']:.4f}+-{s['se']:.4f} tol {s['tol']:.3f}"
             for s in res.detail["states"]]
    report(4, res.passed, time.perf_counter() - t, "; ".join(parts))


@pytest.mark.slow
def test_criterion_5a_viability_monte_carlo():
    t = time.perf_counter()
    b = solve_boundary(STAGED_PARAMS, STAGED_PROFIT)
    rows, ok = [], True
    cases = [("staged", STAGED_PARAMS.mu, STAGED_PARAMS.sigma, b.z0, b.m0, viability_probability(b, STAGED_PARAMS)),
             ("hand", 1.0, 1.0, -1.0, 1.0, viability_formula(1.0, 1.0, -1.0, -2.0))]
    for k, (name, mu, sigma, lo, hi, p) in enumerate(cases):
        p_hat, se, undecided = simulate_gamblers_ruin(mu, sigma, lo, hi, GR_PATHS, GR_DT, seed=100 + k)
        allow = 3 * se + math.sqrt(GR_DT)
        ok &= abs(p_hat - p) <= allow and undecided == 0
        rows.append(f"{name}: closed form {p:.6f} MC {p_hat:.5f}+-{se:.5f} (allow {allow:.4f})")
    report(5, ok, time.perf_counter() - t, "(a) " + "; ".join(rows))


def test_criterion_5b_hand_instance():
    t = time.perf_counter()
    v = viability_formula(1.0, 1.0, -1.0, -2.0)
    ok = abs(v - HAND_EXPECTED) < HAND_TOL
    report(5, ok, time.perf_counter() - t,
           f"(b) formula at z*(0)=-1, m0=1 gives {v:.6f}; expected {HAND_EXPECTED:.6f}. "
           f"The oracle in (a) and hitting_probability ({hitting_probability(1, 1, -1, 1):.6f}) agree with {v:.6f}")


@pytest.mark.slow
def test_criterion_6_running_max():
    t = time.perf_counter()
    res = verify.check_running_max(1.0, 1.0, 1.0, n_paths=RM_PATHS, dt=RM_DT, seed=0)
    d = res.detail
    report(6, res.passed, time.perf_counter() - t,
           f"CDF(0)={d['cdf_at_0']:g}, monotone={d['monotone']}, driftless err {d['driftless_err']:.1e}, "
           f"joint mass err {d['joint_mass_err']:.1e}, marginal err {d['marginal_err']:.1e}, "
           f"MC {d['mc_cdf']:.4f} vs {d['cdf']:.4f} (3SE {3 * d['mc_se']:.4f})")


def test_criterion_7_comparative_statics():
    t = time.perf_counter()
    want = {
        "R": ["m0", "FinalPush", "Iteration", "viability"],
        "L": ["z_star_m0", "FinalPush", "viability"],
        "qbar": ["viability", "Iteration", "FinalPush"],
    }
    ok, parts = True, []
    for which, qs in want.items():
        rep = sweep(STAGED_PARAMS, STAGED_PROFIT, which, rel_step=0.01)
        outs = {q: rep.check(q) for q in qs}
        ok &= all(c.outcome == "pass" and c.confirmed for c in outs.values())
        parts.append(f"{which}: " + ", ".join(f"{q} {c.measured}/{c.expected} {c.outcome}" for q, c in outs.items()))
        for q in ("m1", "m0") if which != "R" else ():
            if rep.check(q).outcome == "unchecked":
                parts.append(f"{which} {q} measured {rep.cutoff_deltas[q]:+.3e} (unchecked)")
    report(7, ok, time.perf_counter() - t, "; ".join(parts))


def test_criterion_8_determinism(tmp_path):
    t = time.perf_counter()
    outs = []
    for run in ("a", "b"):
        base = tmp_path / run
        codes = [
            cli_main(["solve", "--out", str(base)]),
            cli_main(["value", "--out", str(base), "--m-res", "20", "--z-res", "10"]),
            cli_main(["simulate", "--out", str(base / "sim"), "--paths", "2000", "--seed", "7", "--per-path"]),
            cli_main(["sweep", "--out", str(base / "sweep"), "--param", "L"]),
        ]
        assert codes == [0, 0, 0, 0]
        outs.append(base)
    files = ["boundary.csv", "boundary.json", "value_surface.csv", "sim/sim_stats.json", "sim/paths.csv",
             "sweep/sweep.json"]
    same = {f: (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files}
    report(8, all(same.values()), time.perf_counter() - t,
           f"{sum(same.values())}/{len(files)} artifacts byte-identical across two runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
