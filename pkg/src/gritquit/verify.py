"""Acceptance-grade diagnostics: residuals, oracle comparisons and sign checks.

Each check returns a :class:`CheckResult`; :func:`run_all` bundles them into a
:class:`VerifyReport`. Nothing here is timed into the report itself, so the
report JSON is reproducible for a fixed configuration and seed.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .boundary import Boundary, boundary_lookup, solve_boundary
from .maxima import (
    MaxLaw,
    _joint,
    hitting_probability,
    norm_cdf,
    running_max_cdf,
    running_max_density,
    simulate_gamblers_ruin,
    simulate_running_max,
    viability_formula,
    viability_probability,
)
from .model import ModelParams, ProfitSpec, g_dprime, g_eval, g_prime, gamma_roots
from .reference import reference_cutoffs
from .simulate import SimConfig, monte_carlo
from .sweeps import StageMissing, sweep
from .value import bhj_residual, interior_grid, reflection_residual, smooth_pasting_residual, value

HAND_VIABILITY = (math.e**2 - 1) / (math.e**4 - 1)  # 0.119203...


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "detail": _plain(self.detail)}


@dataclass
class VerifyReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_json(self):
        d = {"checks": [c.to_dict() for c in self.checks], "passed": self.passed}
        return json.dumps(d, indent=1, sort_keys=True) + "\n"

    def table(self):
        w = max(len(c.name) for c in self.checks)
        lines = [f"{c.name:<{w}}  {'PASS' if c.passed else 'FAIL'}  {_summary(c.detail)}" for c in self.checks]
        lines.append("ALL PASS" if self.passed else "FAILURES: " + ", ".join(c.name for c in self.checks if not c.passed))
        return "\n".join(lines) + "\n"


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def _summary(d):
    keys = [k for k, v in d.items() if isinstance(v, (int, float, bool, str))][:4]
    return " ".join(f"{k}={d[k]:.3g}" if isinstance(d[k], float) else f"{k}={d[k]}" for k in keys)


def _timed(fn):
    def wrapped(*a, **kw):
        t = time.perf_counter()
        res = fn(*a, **kw)
        res.seconds = time.perf_counter() - t
        return res
    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


# -- 1. closed-form identities ------------------------------------------------

def random_params(rng, n):
    for _ in range(n):
        yield ModelParams(mu=rng.uniform(0.05, 2.0), sigma=rng.uniform(0.5, 2.0), r=rng.uniform(0.02, 2.0),
                          c=0.1, R=0.5, L=2.0)


@_timed
def check_identities(n_draws=100, seed=0, n_x=1000):
    """Vieta identities (1e-12 rel) and the g-kernel ODE identity (1e-10 rel)."""
    rng = np.random.default_rng(seed)
    x = np.linspace(-10.0, 10.0, n_x)
    worst_vieta = worst_ode = 0.0
    for p in random_params(rng, n_draws):
        g = gamma_roots(p)
        s2 = p.sigma**2
        worst_vieta = max(worst_vieta, abs(g.product + 2 * p.r / s2) / (2 * p.r / s2),
                          abs(g.total + 2 * p.mu / s2) / (2 * p.mu / s2))
        a, b, c = 0.5 * s2 * g_dprime(x, g), p.mu * g_prime(x, g), -p.r * g_eval(x, g)
        worst_ode = max(worst_ode, float(np.max(np.abs(a + b + c) / (np.abs(a) + np.abs(b) + np.abs(c)))))
    return CheckResult("identities", worst_vieta < 1e-12 and worst_ode < 1e-10,
                       {"vieta_rel": worst_vieta, "ode_rel": worst_ode, "draws": n_draws})


# -- 2. boundary structure ----------------------------------------------------

def _pi_callables(profit):
    return (lambda m: float(profit.pi(m)), lambda m: float(profit.dpi(m)), lambda m: float(profit.d2pi(m)))


@_timed
def check_boundary(b: Boundary, params, profit, rk4_step=1e-5):
    """Ordering, residuals, stage shapes, continuity, and the fixed-step RK4 cross-check."""
    d = {}
    d["ordering"] = bool(0 <= b.m0 < b.m1 < b.m_star) and abs(b.m_star - profit.qbar) == 0
    d["z_at_peak"] = float(boundary_lookup(b, b.m_star))
    d["residual_m0"] = abs(b.meta["residual_m0"])
    d["residual_m1"] = abs(b.meta["residual_m1"])

    codes = b.stage_codes(b.m)
    shapes = {}
    e = codes == 0
    if e.sum() > 1:
        shapes["exploration_slope_err"] = float(np.max(np.abs(np.diff(b.z[e]) / np.diff(b.m[e]) + 1.0)))
    i = np.flatnonzero(codes == 1)
    if i.size > 2:
        zi = b.z[i]
        dzi = np.diff(zi)
        shapes["iteration_increasing"] = bool(np.all(dzi > 0))
        shapes["iteration_concave"] = bool(np.all(np.diff(b.slope_right[i]) < 0))
    f = np.flatnonzero(codes == 2)
    shapes["final_push_increasing"] = bool(np.all(np.diff(np.append(b.z[f], 0.0)) > 0))
    d.update(shapes)

    eps = 1e-9 * b.m_star
    jumps = [abs(float(boundary_lookup(b, m - eps) - boundary_lookup(b, m + eps))) for m in (b.m0, b.m1) if m > 0]
    d["continuity"] = max(jumps)

    r_m0, r_m1, r_z0 = reference_cutoffs(params.mu, params.sigma, params.r, params.c, params.R, params.L,
                                         *_pi_callables(profit), profit.qbar, h=rk4_step)
    d["rk4_dm0"] = abs(r_m0 - b.m0)
    d["rk4_dm1"] = abs(r_m1 - b.m1)
    d["rk4_dz0"] = abs(r_z0 - b.z0)
    ok = (d["ordering"] and d["z_at_peak"] == 0.0 and d["residual_m0"] < 1e-8 and d["residual_m1"] < 1e-8
          and shapes.get("exploration_slope_err", 0.0) < 1e-9
          and shapes.get("iteration_increasing", True) and shapes.get("iteration_concave", True)
          and shapes["final_push_increasing"] and d["continuity"] < 1e-6
          and max(d["rk4_dm0"], d["rk4_dm1"], d["rk4_dz0"]) < 1e-6)
    return CheckResult("boundary", ok, d)


# -- 3. optimality residuals --------------------------------------------------

@_timed
def check_residuals(b: Boundary, params, profit, h_fd=None):
    """Smooth pasting exactly 0, second-order FD BHJ residual, reflection per stage."""
    roots = gamma_roots(params)
    sp_analytic, _ = smooth_pasting_residual(b, params, profit, roots)
    h = h_fd if h_fd is not None else 1e-3 * b.m_star
    grid = interior_grid(b)
    _, fd_h = bhj_residual(b, params, profit, roots, grid=grid, h_fd=h)
    _, fd_h2 = bhj_residual(b, params, profit, roots, grid=grid, h_fd=h / 2)
    ratio = fd_h / fd_h2 if fd_h2 > 0 else float("inf")

    gs = b.meta.get("grid_step", b.m_star / 400)
    m, res, w = reflection_residual(b, params, profit, roots)
    allow = np.maximum(1e-3 * (np.abs(w) + 1.0), 10.0 * gs**2)
    codes = b.stage_codes(m)
    per_stage = {}
    for k, name in enumerate(("Exploration", "Iteration", "FinalPush")):
        sel = codes == k
        if sel.any():
            per_stage[name] = {"max_residual": float(res[sel].max()),
                               "worst_ratio": float(np.max(res[sel] / allow[sel]))}
    ok = (sp_analytic == 0.0 and ratio > 3.0
          and all(v["worst_ratio"] <= 1.0 for v in per_stage.values()))
    return CheckResult("residuals", ok, {
        "smooth_pasting_analytic": sp_analytic, "bhj_fd_h": fd_h, "bhj_fd_h2": fd_h2,
        "bhj_order_ratio": ratio, "reflection": per_stage,
    })


# -- 4. Monte Carlo value -----------------------------------------------------

def interior_states(b: Boundary):
    """(z, m) at the origin and one state inside each non-exploration stage."""
    states = [(0.0, 0.0)]
    for lo, hi in ((b.m0, b.m1), (b.m1, b.m_star)):
        m = lo + 0.4 * (hi - lo)
        states.append((0.5 * float(boundary_lookup(b, m)), m))
    if b.m0 > 0:
        m = 0.5 * b.m0
        states.insert(1, (0.5 * float(boundary_lookup(b, m)), m))
    return states


@_timed
def check_monte_carlo(b: Boundary, params, profit, n_paths=200_000, dt=1e-3, seed=0, threads=None):
    """Mean discounted payoff vs closed-form W within max(3 SE, 2%|W| + 0.01)."""
    roots = gamma_roots(params)
    rows = []
    ok = True
    for k, (z, m) in enumerate(interior_states(b)):
        w = float(value(z, m, b, params, profit, roots))
        st = monte_carlo(b, params, profit, SimConfig(dt=dt, n_paths=n_paths, seed=seed + k, start_z=z, start_m=m),
                         threads=threads)
        se = st.mean_payoff.se or 0.0
        tol = max(3 * se, 0.02 * abs(w) + 0.01)
        err = abs(st.mean_payoff.mean - w)
        ok &= err <= tol
        rows.append({"z": z, "m": m, "W": w, "mc": st.mean_payoff.mean, "se": se, "err": err, "tol": tol})
    return CheckResult("monte_carlo_value", ok, {"states": rows, "n_paths": n_paths, "dt": dt})


# -- 5. viability -------------------------------------------------------------

@_timed
def check_viability(b: Boundary, params, n_paths=100_000, dt=1e-3, seed=0):
    """Gambler's-ruin MC vs the closed form, plus the hand instance on the formula.

    When the configured boundary has no exploration stage, the MC oracle runs
    on the hand-instance barriers instead.
    """
    if b.m0 > 0:
        mu, sigma, lower, upper = params.mu, params.sigma, b.z0, b.m0
        source = "config"
        p = viability_probability(b, params)
    else:
        mu, sigma, lower, upper = 1.0, 1.0, -1.0, 1.0
        source = "hand_instance"
        p = hitting_probability(mu, sigma, lower, upper)
    p_hat, se, undecided = simulate_gamblers_ruin(mu, sigma, lower, upper, n_paths, dt, seed=seed)
    allow = 3 * se + math.sqrt(dt)
    mc_ok = abs(p_hat - p) <= allow and undecided == 0
    hand = viability_formula(1.0, 1.0, -1.0, -2.0)
    hand_ok = abs(hand - HAND_VIABILITY) < 1e-6
    return CheckResult("viability", mc_ok and hand_ok, {
        "source": source, "closed_form": p, "mc": p_hat, "se": se, "allow": allow, "mc_ok": mc_ok,
        "hand_formula": hand, "hand_expected": HAND_VIABILITY, "hand_ok": hand_ok,
    })


# -- 6. running maximum -------------------------------------------------------

@_timed
def check_running_max(mu=1.0, sigma=1.0, t=1.0, n_paths=20_000, dt=1e-5, seed=0, level=1.0):
    from scipy import integrate

    law = MaxLaw(mu, sigma, t)
    grid = np.linspace(0.0, 10.0 * law.scale + abs(mu) * t, 1000)
    cdf = running_max_cdf(law, grid)
    d = {"cdf_at_0": float(running_max_cdf(law, 0.0)), "monotone": bool(np.all(np.diff(cdf) >= 0))}
    law0 = MaxLaw(0.0, sigma, t)
    d["driftless_err"] = float(np.max(np.abs(running_max_cdf(law0, grid) - (2 * norm_cdf(grid / law0.scale) - 1))))

    span = 12.0 * law.scale + abs(mu) * t
    mass, _ = integrate.dblquad(lambda b, a: float(_joint(law, a, b)), 0.0, span, lambda a: -span, lambda a: a,
                                epsabs=1e-12, epsrel=1e-10)
    d["joint_mass_err"] = abs(mass - 1.0)
    marg = 0.0
    for a in (0.1, 0.5, 1.0, 2.0, 3.0):
        v, _ = integrate.quad(lambda b: float(_joint(law, a, b)), -span, a, epsabs=1e-13, epsrel=1e-12)
        marg = max(marg, abs(v - float(running_max_density(law, a))))
    d["marginal_err"] = marg

    x = simulate_running_max(law, n_paths, dt, seed=seed)
    p_hat = float(np.mean(x <= level))
    se = math.sqrt(p_hat * (1 - p_hat) / n_paths)
    p = float(running_max_cdf(law, level))
    d.update({"mc_cdf": p_hat, "cdf": p, "mc_se": se, "mc_err": abs(p_hat - p)})
    ok = (d["cdf_at_0"] == 0.0 and d["monotone"] and d["driftless_err"] < 1e-12
          and d["joint_mass_err"] < 1e-6 and marg < 1e-8 and abs(p_hat - p) <= 3 * se)
    return CheckResult("running_max", ok, d)


# -- 7. comparative statics ---------------------------------------------------

@_timed
def check_sweeps(params, profit, rel_step=0.01):
    reports = {}
    ok = True
    for which in ("R", "L", "qbar"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StageMissing)
            rep = sweep(params, profit, which, rel_step=rel_step)
        ok &= rep.passed
        reports[which] = {"passed": rep.passed, "flags": rep.flags,
                          "checks": {c.quantity: c.outcome for c in rep.checks}}
    return CheckResult("sweeps", ok, reports)


# -- 8. determinism -----------------------------------------------------------

@_timed
def check_determinism(b: Boundary, params, profit, grid_step=None, seed=0, n_paths=2000):
    b2 = solve_boundary(params, profit, grid_step=grid_step)
    same_boundary = b.to_csv() == b2.to_csv() and b.to_json() == b2.to_json()
    cfg = SimConfig(n_paths=n_paths, seed=seed)
    s1 = monte_carlo(b, params, profit, cfg)
    s2 = monte_carlo(b2, params, profit, cfg)
    same_sim = s1.to_json() == s2.to_json() and s1.paths_csv() == s2.paths_csv()
    return CheckResult("determinism", same_boundary and same_sim,
                       {"boundary_identical": same_boundary, "simulation_identical": same_sim})


def run_all(params: ModelParams, profit: ProfitSpec, grid_step=None, n_paths=200_000, dt=1e-3, seed=0,
            rel_step=0.01, progress=None) -> VerifyReport:
    """Every acceptance-grade check on one configuration."""
    b = solve_boundary(params, profit, grid_step=grid_step)
    steps = [
        lambda: check_identities(seed=seed),
        lambda: check_boundary(b, params, profit),
        lambda: check_residuals(b, params, profit),
        lambda: check_monte_carlo(b, params, profit, n_paths=n_paths, dt=dt, seed=seed),
        lambda: check_viability(b, params, seed=seed),
        lambda: check_running_max(params.mu, params.sigma, seed=seed),
        lambda: check_sweeps(params, profit, rel_step=rel_step),
        lambda: check_determinism(b, params, profit, grid_step=grid_step, seed=seed),
    ]
    out = []
    for s in steps:
        res = s()
        if progress:
            progress(res)
        out.append(res)
    return VerifyReport(out)
