"""Comparative statics by re-solving the boundary under a perturbed parameter.

Signs are measured as finite differences of whole solves. Stage shifts are
taken on the overlap of the base and perturbed stage domains, so a moving
cutoff never mixes two regimes into one difference.
"""

from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boundary import Boundary, Stage, boundary_lookup, solve_boundary
from .maxima import viability_probability
from .model import ModelParams, ProfitSpec, validate_params

PARAMETERS = ("R", "L", "qbar")
CUTOFFS = ("m0", "m1", "z_star_0", "z_star_m0", "z_star_m1")
STAGES = (Stage.EXPLORATION, Stage.ITERATION, Stage.FINAL_PUSH)

# expected signs per parameter: "+", "-", "0"; "info" is measured but never judged
EXPECTED = {
    "R": {
        "m0": "+", "z_star_m0": "-",
        Stage.EXPLORATION.value: "+", Stage.ITERATION.value: "-", Stage.FINAL_PUSH.value: "0",
        "viability": "-",
        "m1": "info", "z_star_0": "info", "z_star_m1": "info",
    },
    "L": {
        "m0": "+", "z_star_m0": "0",
        Stage.EXPLORATION.value: "+", Stage.FINAL_PUSH.value: "-",
        "viability": "-",
        Stage.ITERATION.value: "info", "m1": "info", "z_star_m1": "info", "z_star_0": "info",
    },
    "qbar": {
        Stage.EXPLORATION.value: "-", Stage.ITERATION.value: "+", Stage.FINAL_PUSH.value: "-",
        "viability": "+",
        "m0": "info", "m1": "info", "z_star_0": "info", "z_star_m0": "info", "z_star_m1": "info",
    },
}

# quantities that need an exploration stage at base
_NEEDS_M0 = {"m0", "z_star_m0", Stage.EXPLORATION.value, "viability"}


class StageMissing(UserWarning):
    """The base boundary has no exploration stage (m0 = 0)."""


@dataclass
class Shift:
    sign: str
    lo: float
    hi: float
    n: int

    def to_dict(self):
        return {"sign": self.sign, "min": self.lo, "max": self.hi, "n": self.n}


@dataclass
class Check:
    quantity: str
    expected: str
    measured: str
    outcome: str  # pass | fail | unchecked | indistinguishable | skipped
    confirmed: bool | None = None

    def to_dict(self):
        return {"quantity": self.quantity, "expected": self.expected, "measured": self.measured,
                "outcome": self.outcome, "richardson_confirmed": self.confirmed}


@dataclass
class SweepReport:
    parameter: str
    base_value: float
    perturbed_value: float
    rel_step: float
    threshold: float
    cutoff_deltas: dict
    stage_shifts: dict
    viability_base: float
    viability_delta: float
    checks: list
    richardson: dict = field(default_factory=dict)
    antisymmetry: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.outcome != "fail" for c in self.checks)

    def check(self, quantity) -> Check:
        for c in self.checks:
            if c.quantity == quantity:
                return c
        raise KeyError(quantity)

    def to_dict(self):
        return {
            "parameter": self.parameter,
            "base_value": self.base_value,
            "perturbed_value": self.perturbed_value,
            "rel_step": self.rel_step,
            "threshold": self.threshold,
            "cutoff_deltas": self.cutoff_deltas,
            "stage_shifts": {k: v.to_dict() for k, v in self.stage_shifts.items()},
            "viability_base": self.viability_base,
            "viability_delta": self.viability_delta,
            "checks": [c.to_dict() for c in self.checks],
            "richardson": self.richardson,
            "antisymmetry": self.antisymmetry,
            "flags": list(self.flags),
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def table(self) -> str:
        lines = [f"sweep {self.parameter}: {self.base_value!r} -> {self.perturbed_value!r} "
                 f"(rel_step {self.rel_step:g}, threshold {self.threshold:.1e})"]
        lines.append(f"{'quantity':<14}{'delta':>16}{'expected':>10}{'measured':>10}  outcome")
        for c in self.checks:
            if c.quantity in self.cutoff_deltas:
                d = f"{self.cutoff_deltas[c.quantity]:.6e}"
            elif c.quantity in self.stage_shifts:
                s = self.stage_shifts[c.quantity]
                d = "n/a" if s.n == 0 else f"[{s.lo:.2e},{s.hi:.2e}]"
            else:
                d = f"{self.viability_delta:.6e}"
            conf = "" if c.confirmed is None else (" (confirmed)" if c.confirmed else " (NOT confirmed)")
            lines.append(f"{c.quantity:<14}{d:>16}{c.expected:>10}{c.measured:>10}  {c.outcome}{conf}")
        if self.flags:
            lines.append("flags: " + ", ".join(self.flags))
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def perturb(params: ModelParams, profit: ProfitSpec, which: str, rel_step: float):
    """Return (params, profit, base value, new value) with ``which`` scaled by 1 + rel_step.

    qbar moves with pi(0) and the curvature held fixed (see ProfitSpec.with_qbar).
    """
    if which == "R":
        return params.replace(R=params.R * (1 + rel_step)), profit, params.R, params.R * (1 + rel_step)
    if which == "L":
        return params.replace(L=params.L * (1 + rel_step)), profit, params.L, params.L * (1 + rel_step)
    if which == "qbar":
        q = profit.qbar * (1 + rel_step)
        return params, profit.with_qbar(q), profit.qbar, q
    raise ValueError(f"unknown sweep parameter {which!r}; expected one of {PARAMETERS}")


def _cutoffs(b: Boundary) -> dict:
    return {"m0": b.m0, "m1": b.m1, "z_star_0": b.z0, "z_star_m0": b.z_at_m0(), "z_star_m1": b.z_at_m1()}


def _sign(lo, hi, thr):
    if max(abs(lo), abs(hi)) < thr:
        return "0"
    if lo > -thr and hi > thr:
        return "+"
    if hi < thr and lo < -thr:
        return "-"
    return "mixed"


def _domain(b: Boundary, stage: Stage):
    return {
        Stage.EXPLORATION: (0.0, b.m0),
        Stage.ITERATION: (b.m0, b.m1),
        Stage.FINAL_PUSH: (b.m1, b.m_star),
    }[stage]


def stage_shift(base: Boundary, pert: Boundary, stage: Stage, thr: float, n: int = 64) -> Shift:
    """Range of z*_pert - z*_base on the overlap of the two stage domains."""
    a0, a1 = _domain(base, stage)
    b0, b1 = _domain(pert, stage)
    lo, hi = max(a0, b0), min(a1, b1)
    if not hi > lo:
        return Shift("none", float("nan"), float("nan"), 0)
    pad = 0.02 * (hi - lo)
    m = np.linspace(lo + pad, hi - pad, n)
    d = boundary_lookup(pert, m) - boundary_lookup(base, m)
    return Shift(_sign(float(d.min()), float(d.max()), thr), float(d.min()), float(d.max()), n)


def _solve_pair(cases, grid_step, tol):
    def run(case):
        p, f = case
        validate_params(p, f)
        return solve_boundary(p, f, grid_step=grid_step, tol=tol)

    threads = int(os.environ.get("GRITQUIT_THREADS", "0") or 0) or (os.cpu_count() or 1)
    if threads > 1 and len(cases) > 1:
        with ThreadPoolExecutor(min(threads, len(cases))) as ex:
            return list(ex.map(run, cases))
    return [run(c) for c in cases]


def _measure(base, pert, params, pparams, thr):
    cb, cp = _cutoffs(base), _cutoffs(pert)
    deltas = {k: cp[k] - cb[k] for k in CUTOFFS}
    shifts = {s.value: stage_shift(base, pert, s, thr) for s in STAGES}
    vb = viability_probability(base, params)
    dv = viability_probability(pert, pparams) - vb
    measured = {k: _sign(v, v, thr) for k, v in deltas.items()}
    measured.update({k: v.sign for k, v in shifts.items()})
    measured["viability"] = _sign(dv, dv, thr)
    return deltas, shifts, vb, dv, measured


def sweep(params: ModelParams, profit: ProfitSpec, which: str, rel_step: float = 0.01,
          grid_step: float | None = None, tol: float = 1e-10,
          richardson: bool = True, antisymmetry: bool = True) -> SweepReport:
    """Perturb ``which`` by ``rel_step`` (relative), re-solve and judge the expected signs.

    A sign is only judged when the difference exceeds ten times the solver
    tolerance; smaller differences are reported as indistinguishable. With
    ``richardson`` the signs are re-measured at half the step and must agree.
    """
    if which not in PARAMETERS:
        raise ValueError(f"unknown sweep parameter {which!r}; expected one of {PARAMETERS}")
    if not rel_step > 0:
        raise ValueError("rel_step must be > 0")
    thr = 10.0 * tol
    p1, f1, v0, v1 = perturb(params, profit, which, rel_step)
    cases = [(params, profit), (p1, f1)]
    if richardson:
        cases.append(perturb(params, profit, which, rel_step / 2)[:2])
    if antisymmetry:
        cases.append(perturb(params, profit, which, -rel_step)[:2])
    sols = _solve_pair(cases, grid_step, tol)
    base, pert = sols[0], sols[1]

    deltas, shifts, vb, dv, measured = _measure(base, pert, params, p1, thr)

    flags = []
    missing = base.m0 <= 0
    if missing:
        flags.append("StageMissing")
        warnings.warn("m0 = 0 at base; exploration-stage checks skipped", StageMissing, stacklevel=2)

    half = None
    rich = {}
    if richardson:
        ph = cases[2][0]
        dh, sh, _, dvh, half = _measure(base, sols[2], params, ph, thr)
        for k in CUTOFFS:
            # one-sided differences: D(h) = D' h + O(h^2), so 2 D(h/2) - D(h) removes the h^2 term
            d1, d2 = deltas[k] / (rel_step * v0), dh[k] / (rel_step / 2 * v0)
            rich[k] = {"slope_h": d1, "slope_h2": d2, "extrapolated": 2 * d2 - d1}
        rich["viability"] = {"slope_h": dv / (rel_step * v0), "slope_h2": dvh / (rel_step / 2 * v0),
                             "extrapolated": 2 * dvh / (rel_step / 2 * v0) - dv / (rel_step * v0)}

    anti = {}
    if antisymmetry:
        pm = cases[-1][0]
        dm, _, _, dvm, _ = _measure(base, sols[-1], params, pm, thr)
        for k in CUTOFFS:
            a, b = deltas[k], dm[k]
            if abs(a) < thr and abs(b) < thr:
                anti[k] = "indistinguishable"
            else:
                anti[k] = "ok" if a * b < 0 else "violated"
        anti["viability"] = "indistinguishable" if max(abs(dv), abs(dvm)) < thr else ("ok" if dv * dvm < 0 else "violated")

    checks = []
    for q, exp in EXPECTED[which].items():
        got = measured[q]
        conf = None
        if missing and q in _NEEDS_M0:
            outcome = "skipped"
        elif exp == "info":
            outcome = "unchecked"
        elif exp == "0":
            outcome = "pass" if got == "0" else "fail"
            conf = None if half is None else half[q] == "0"
        elif got == "0":
            outcome = "indistinguishable"
        else:
            outcome = "pass" if got == exp else "fail"
            if half is not None:
                conf = half[q] == got
                if outcome == "pass" and not conf:
                    outcome = "fail"
        checks.append(Check(q, exp, got, outcome, conf))

    return SweepReport(
        parameter=which, base_value=v0, perturbed_value=v1, rel_step=rel_step, threshold=thr,
        cutoff_deltas=deltas, stage_shifts=shifts, viability_base=vb, viability_delta=dv,
        checks=checks, richardson=rich, antisymmetry=anti, flags=flags,
    )


def convergence_study(params, profit, which, quantity="m0", steps=(0.02, 0.01, 0.005), **kw):
    """Difference quotients d(quantity)/d(parameter) over decreasing relative steps."""
    out = []
    for h in steps:
        rep = sweep(params, profit, which, rel_step=h, richardson=False, antisymmetry=False, **kw)
        dq = rep.cutoff_deltas[quantity] if quantity in rep.cutoff_deltas else rep.viability_delta
        out.append((h, dq / (rep.perturbed_value - rep.base_value)))
    return out
