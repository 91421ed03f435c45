"""Free-boundary solver.

The boundary z*(m) is integrated backwards from (qbar, 0). Three regimes apply
as m decreases:

* FinalPush  ``1 + z' = (g/g')(-z) * pi'(m) / (pi(m) - L + c)``  (launch at the boundary)
* Iteration  ``z' = g(-z) - 1``                                  (restart at the boundary)
* Exploration ``z' = -1``                                         (abort at the boundary)

The switch points m1 and m0 are located as roots of the value-matching residuals.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .model import (
    GammaRoots,
    GritQuitError,
    ModelParams,
    ProfitSpec,
    g_eval,
    g_minus_one,
    g_prime,
    gamma_roots,
    validate_params,
)


class Stage(str, enum.Enum):
    EXPLORATION = "Exploration"
    ITERATION = "Iteration"
    FINAL_PUSH = "FinalPush"
    POST_PEAK = "PostPeak"


class BoundaryError(GritQuitError):
    pass


class NoLaunchRegion(BoundaryError):
    pass


class StepFailure(BoundaryError):
    pass


class SingularBoundary(BoundaryError):
    pass


class DomainError(BoundaryError, ValueError):
    pass


class DegenerateExploration(BoundaryError):
    """The exploration line z*(m0) + m0 - m reaches z = 0 before m = 0."""


def terminal_slope(params: ModelParams, profit: ProfitSpec, roots: GammaRoots | None = None) -> float:
    """Limit of dz*/dm as m -> qbar from below."""
    roots = roots or gamma_roots(params)
    q = profit.qbar
    a = float(profit.d2pi(q)) / ((float(profit.pi(q)) - params.L + params.c) * roots.product)
    return math.sqrt(a + 0.25) - 0.5


def ode_rhs(m, z, stage, params, profit, roots):
    """dz*/dm in the given stage."""
    stage = Stage(stage)
    if stage is Stage.EXPLORATION:
        return -1.0
    if stage is Stage.ITERATION:
        return float(g_minus_one(-z, roots))
    if stage is Stage.POST_PEAK:
        return 0.0
    margin = float(profit.pi(m)) - params.L + params.c
    if margin <= 0:
        raise DomainError(f"pi(m) - L + c = {margin} <= 0 at m = {m}")
    gp = float(g_prime(-z, roots))
    if gp == 0.0:
        raise SingularBoundary(f"g'(-z) = 0 at (m, z) = ({m}, {z}); the FinalPush slope is singular")
    return float(g_eval(-z, roots)) / gp * float(profit.dpi(m)) / margin - 1.0


def _launch_residual(m, z, params, profit, roots):
    return float(g_minus_one(-z, roots)) - params.R / (float(profit.pi(m)) - params.L + params.c)


def _viability_residual(z, params, roots):
    return float(g_minus_one(-z, roots)) - params.R / params.c


@dataclass(frozen=True)
class Boundary:
    """Solved free boundary on a grid over [0, m*].

    ``slope_left``/``slope_right`` are the one-sided derivatives at each node;
    lookups use the cubic Hermite interpolant they define.
    """

    m: np.ndarray
    z: np.ndarray
    slope_left: np.ndarray
    slope_right: np.ndarray
    m0: float
    m1: float
    m_star: float
    meta: dict = field(default_factory=dict, compare=False)

    def stage_of(self, m):
        m = np.asarray(m, dtype=float)
        out = np.where(m < self.m0, 0, np.where(m < self.m1, 1, np.where(m < self.m_star, 2, 3)))
        names = np.array([s.value for s in Stage], dtype=object)
        if out.ndim == 0:
            return Stage(names[int(out)])
        return names[out]

    def stage_codes(self, m):
        """Integer stage codes 0..3 (Exploration, Iteration, FinalPush, PostPeak)."""
        m = np.asarray(m, dtype=float)
        return np.where(m < self.m0, 0, np.where(m < self.m1, 1, np.where(m < self.m_star, 2, 3)))

    @property
    def z0(self):
        """z*(0)."""
        return float(self.z[0])

    def z_at_m0(self):
        return float(boundary_lookup(self, self.m0))

    def z_at_m1(self):
        return float(boundary_lookup(self, self.m1))

    @property
    def stages(self):
        return [Stage(s) for s in self.stage_of(self.m)]

    # -- persistence --------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "z_star", "stage", "slope_left", "slope_right"])
        for row in zip(self.m, self.z, self.stage_of(self.m), self.slope_left, self.slope_right):
            w.writerow([_fmt(row[0]), _fmt(row[1]), row[2], _fmt(row[3]), _fmt(row[4])])
        return buf.getvalue()

    def to_json(self) -> str:
        d = {
            "m0": self.m0,
            "m1": self.m1,
            "m_star": self.m_star,
            "z_star_0": self.z0,
            "grid": {
                "m": self.m.tolist(),
                "z_star": self.z.tolist(),
                "slope_left": self.slope_left.tolist(),
                "slope_right": self.slope_right.tolist(),
            },
            "meta": self.meta,
        }
        return json.dumps(d, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Boundary":
        d = json.loads(text)
        g = d["grid"]
        return cls(
            np.array(g["m"], dtype=float),
            np.array(g["z_star"], dtype=float),
            np.array(g["slope_left"], dtype=float),
            np.array(g["slope_right"], dtype=float),
            float(d["m0"]),
            float(d["m1"]),
            float(d["m_star"]),
            d.get("meta", {}),
        )

    @classmethod
    def from_csv(cls, text: str, m0: float, m1: float) -> "Boundary":
        rows = list(csv.DictReader(io.StringIO(text)))
        col = lambda k: np.array([float(r[k]) for r in rows])
        m = col("m")
        return cls(m, col("z_star"), col("slope_left"), col("slope_right"), float(m0), float(m1), float(m[-1]))


def _fmt(x):
    return repr(float(x))


def boundary_lookup(b: Boundary, m):
    """z*(m) by cubic Hermite interpolation; exact at nodes, 0 for m >= m*."""
    m_arr = np.asarray(m, dtype=float)
    scalar = m_arr.ndim == 0
    m_arr = np.atleast_1d(m_arr)
    nodes = b.m
    i = np.clip(np.searchsorted(nodes, m_arr, side="right") - 1, 0, len(nodes) - 2)
    h = nodes[i + 1] - nodes[i]
    t = (m_arr - nodes[i]) / h
    t2, t3 = t * t, t * t * t
    out = (
        (2 * t3 - 3 * t2 + 1) * b.z[i]
        + (t3 - 2 * t2 + t) * h * b.slope_right[i]
        + (-2 * t3 + 3 * t2) * b.z[i + 1]
        + (t3 - t2) * h * b.slope_left[i + 1]
    )
    out = np.where(m_arr >= b.m_star, 0.0, out)
    hit = np.searchsorted(nodes, m_arr)
    hit = np.clip(hit, 0, len(nodes) - 1)
    out = np.where((nodes[hit] == m_arr) & (m_arr < b.m_star), b.z[hit], out)
    return float(out[0]) if scalar else out


def _integrate(rhs, m_from, z_from, m_to, tol, events=None, dense=False):
    sol = solve_ivp(
        lambda m, y: [rhs(m, y[0])],
        (m_from, m_to),
        [z_from],
        method="RK45",
        rtol=tol,
        atol=tol * 1e-2,
        events=events,
        dense_output=dense,
    )
    if sol.status == -1:
        raise StepFailure(sol.message)
    return sol


def _polish(residual_at, rhs, sol, tol):
    """Refine an event bracketed by the adaptive run.

    The residual is evaluated on z re-integrated from the last accepted node,
    not on the dense-output interpolant.
    """
    m_ev = float(sol.t_events[0][0])
    m_a, z_a = float(sol.t[-2]), float(sol.y[0, -2])

    def z_of(m):
        if m == m_a:
            return z_a
        return float(_integrate(rhs, m_a, z_a, m, tol * 1e-2).y[0, -1])

    f = lambda m: residual_at(m, z_of(m))
    f_hi = f(m_a)
    width = 1e-6 * max(1.0, m_a - m_ev)
    lo = m_ev
    while f(lo) * f_hi > 0:
        lo = max(lo - width, 0.0)
        width *= 4
        if lo == 0.0 and f(lo) * f_hi > 0:
            return m_ev, z_of(m_ev)
    m_root = brentq(f, lo, m_a, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return m_root, z_of(m_root)


def solve_boundary(params: ModelParams, profit: ProfitSpec, grid_step: float | None = None,
                   tol: float = 1e-10, start_offset: float | None = None) -> Boundary:
    """Solve the free boundary and cutoffs.

    ``start_offset`` is the length of the analytic first step away from the
    singular terminal point (default ``1e-7 * qbar``).
    """
    validate_params(params, profit)
    roots = gamma_roots(params)
    qbar = profit.qbar
    grid_step = grid_step or qbar / 400.0
    if grid_step > qbar / 200.0:
        raise ValueError(f"grid_step must be <= qbar/200 = {qbar / 200.0}")
    h0 = start_offset if start_offset is not None else 1e-7 * qbar
    s_star = terminal_slope(params, profit, roots)

    def rhs_final(m, z):
        return ode_rhs(m, z, Stage.FINAL_PUSH, params, profit, roots)

    def rhs_iter(m, z):
        return float(g_minus_one(-z, roots))

    def ev_launch(m, y):
        return _launch_residual(m, y[0], params, profit, roots)

    ev_launch.terminal = True

    def ev_no_margin(m, y):
        return float(profit.pi(m)) - params.L

    ev_no_margin.terminal = True

    m_start, z_start = qbar - h0, -s_star * h0
    fin = _integrate(rhs_final, m_start, z_start, 0.0, tol, events=[ev_launch, ev_no_margin], dense=True)
    if fin.t_events[1].size and not (fin.t_events[0].size and fin.t_events[0][0] > fin.t_events[1][0]):
        raise NoLaunchRegion("pi(m) falls to L before the launch cutoff is reached")
    if not fin.t_events[0].size:
        raise NoLaunchRegion("launch cutoff m1 not found on (0, qbar)")
    m1, z1 = _polish(lambda m, z: _launch_residual(m, z, params, profit, roots), rhs_final, fin, tol)

    def ev_viable(m, y):
        return _viability_residual(y[0], params, roots)

    ev_viable.terminal = True
    it = _integrate(rhs_iter, m1, z1, 0.0, tol, events=[ev_viable], dense=True)
    if it.t_events[0].size:
        m0, zm0 = _polish(lambda m, z: _viability_residual(z, params, roots), rhs_iter, it, tol)
    else:
        m0, zm0 = 0.0, float(it.y[0, -1])
    if zm0 + m0 >= 0:
        raise DegenerateExploration(
            f"z*(m0) + m0 = {zm0 + m0:.6g} >= 0: the project is abandoned at the origin"
        )

    # grid: uniform nodes plus the cutoffs
    n = int(math.ceil(qbar / grid_step))
    nodes = np.unique(np.concatenate([np.linspace(0.0, qbar, n + 1), [m0, m1]]))
    nodes = nodes[(nodes >= 0) & (nodes <= qbar)]
    z = np.empty_like(nodes)
    sl = np.empty_like(nodes)
    sr = np.empty_like(nodes)

    expl = nodes < m0
    z[expl] = zm0 + m0 - nodes[expl]
    sl[expl] = sr[expl] = -1.0

    itr = (nodes >= m0) & (nodes < m1)
    if itr.any():
        z[itr] = it.sol(nodes[itr])[0]
        z[nodes == m0] = zm0
        sl[itr] = sr[itr] = g_minus_one(-z[itr], roots)

    fp = (nodes >= m1) & (nodes < qbar)
    inner = fp & (nodes > m_start)
    z[fp] = fin.sol(nodes[fp])[0]
    z[nodes == m1] = z1
    z[inner] = -s_star * (qbar - nodes[inner])
    sl[fp] = sr[fp] = [rhs_final(mm, zz) if zz < 0 else s_star for mm, zz in zip(nodes[fp], z[fp])]
    z[-1] = 0.0
    sl[-1] = s_star
    sr[-1] = 0.0

    # one-sided slopes at the switch points
    k1 = int(np.flatnonzero(nodes == m1)[0])
    sl[k1] = rhs_iter(m1, z1)
    if m0 > 0:
        k0 = int(np.flatnonzero(nodes == m0)[0])
        sl[k0] = -1.0
        sr[k0] = rhs_iter(m0, zm0)

    res_m1 = _launch_residual(m1, z1, params, profit, roots)
    res_m0 = _viability_residual(zm0, params, roots) if m0 > 0 else 0.0
    meta = {
        "grid_step": grid_step,
        "tol": tol,
        "start_offset": h0,
        "terminal_slope": s_star,
        "residual_m0": res_m0,
        "residual_m1": res_m1,
        "z_star_m0": zm0,
        "z_star_m1": z1,
        "n_steps_final": int(fin.t.size),
        "n_steps_iteration": int(it.t.size),
    }
    return Boundary(nodes, z, sl, sr, float(m0), float(m1), float(qbar), meta)
