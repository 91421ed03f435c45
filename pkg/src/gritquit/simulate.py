"""Monte Carlo simulation of the controlled drawdown process.

Euler-Maruyama on the quality process with the running maximum credited from
the upward overflow of the drawdown. Each path owns a Philox stream keyed by
the master seed with the path id in the counter, so results do not depend on
how paths are grouped or scheduled.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boundary import Boundary, boundary_lookup
from .model import GritQuitError


class Outcome(str, enum.Enum):
    LAUNCHED = "Launched"
    ABORTED = "Aborted"
    HORIZON_CAPPED = "HorizonCapped"


_OUTCOMES = [Outcome.LAUNCHED, Outcome.ABORTED, Outcome.HORIZON_CAPPED]


class SimConfigError(GritQuitError, ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    n_paths: int = 10_000
    seed: int = 0
    t_max: float | None = None
    start_z: float = 0.0
    start_m: float = 0.0
    chunk: int = 256
    block: int = 16_384

    def horizon(self, r):
        return self.t_max if self.t_max is not None else 40.0 / r

    def validate(self, r):
        errs = []
        if not self.dt > 0:
            errs.append(f"dt must be > 0, got {self.dt}")
        elif self.dt > 1e-2 / r * (1 + 1e-12):
            errs.append(f"dt={self.dt} exceeds 1e-2/r={1e-2 / r}")
        if self.horizon(r) * r < 20 * (1 - 1e-12):
            errs.append(f"t_max*r must be >= 20, got {self.horizon(r) * r}")
        if self.n_paths < 1:
            errs.append("n_paths must be >= 1")
        if self.start_z > 0:
            errs.append("start_z must be <= 0")
        if self.start_m < 0:
            errs.append("start_m must be >= 0")
        if not 0 <= self.seed < 2**64:
            errs.append("seed must fit in 64 bits")
        if errs:
            raise SimConfigError("; ".join(errs))


@dataclass
class PathResult:
    outcome: Outcome
    launch_quality: float
    t_end: float
    n_restarts: int
    restart_times: list
    discounted_payoff: float
    restart_qualities: list = field(default_factory=list)
    terminal_value: float = 0.0
    flow_cost: float = 0.0
    restart_cost: float = 0.0


@dataclass
class Estimate:
    mean: float
    se: float | None

    def to_dict(self):
        return {"mean": self.mean, "se": self.se}


@dataclass
class SimStats:
    n_paths: int
    p_launch: Estimate
    p_abort: Estimate
    p_capped: Estimate
    mean_payoff: Estimate
    mean_launch_quality: Estimate
    mean_time: Estimate
    restart_histogram: dict
    paths: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        return {
            "n_paths": self.n_paths,
            "p_launch": self.p_launch.to_dict(),
            "p_abort": self.p_abort.to_dict(),
            "p_capped": self.p_capped.to_dict(),
            "mean_payoff": self.mean_payoff.to_dict(),
            "mean_launch_quality": self.mean_launch_quality.to_dict(),
            "mean_time": self.mean_time.to_dict(),
            "restart_histogram": {str(k): v for k, v in sorted(self.restart_histogram.items())},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def paths_csv(self):
        p = self.paths
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path_id", "outcome", "t_end", "launch_quality", "n_restarts", "discounted_payoff"])
        for i in range(self.n_paths):
            w.writerow([
                int(p["path_id"][i]), _OUTCOMES[p["outcome"][i]].value, repr(float(p["t_end"][i])),
                repr(float(p["launch_quality"][i])), int(p["n_restarts"][i]), repr(float(p["payoff"][i])),
            ])
        return buf.getvalue()


def step(z, m, dx, params, dt):
    """One Euler step: ``z + mu dt + sigma dx``, overflow above 0 credited to m."""
    z_new = z + params.mu * dt + params.sigma * dx
    up = np.maximum(z_new, 0.0)
    return np.minimum(z_new, 0.0), m + up


def path_stream(seed: int, path_id: int) -> np.random.Generator:
    key = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, path_id, 0]))


def _run_block(b: Boundary, params, profit, cfg: SimConfig, ids, record_restarts=False):
    """Simulate the paths ``ids``; returns per-path arrays in the order of ``ids``."""
    n = len(ids)
    dt, r, c, R, L = cfg.dt, params.r, params.c, params.R, params.L
    sqdt = math.sqrt(dt)
    n_steps = int(math.ceil(cfg.horizon(r) / dt - 1e-9))
    key = np.random.SeedSequence(cfg.seed).generate_state(2, np.uint64)
    gens = [np.random.Generator(np.random.Philox(key=key, counter=[0, 0, int(i), 0])) for i in ids]

    outcome = np.full(n, 2, dtype=np.int8)
    t_end = np.full(n, n_steps * dt)
    m_end = np.empty(n)
    n_restart = np.zeros(n, dtype=np.int64)
    terminal = np.zeros(n)
    flow = np.zeros(n)
    rcost = np.zeros(n)
    restart_log = [[] for _ in range(n)] if record_restarts else None

    act = np.arange(n)
    z = np.full(n, float(cfg.start_z))
    m = np.full(n, float(cfg.start_m))
    m_star = b.m_star

    def settle(k, z, m):
        """Apply decisions after step k (time k*dt); returns mask of still-active paths."""
        t = k * dt
        disc = math.exp(-r * t)
        post = m >= m_star
        zs = boundary_lookup(b, m)
        code = b.stage_codes(m)
        hit = (z <= zs) & ~post
        launch = post | (hit & (code == 2))
        abort = hit & (code == 0)
        restart = hit & (code == 1)
        if restart.any():
            idx = act[restart]
            z[restart] = 0.0
            n_restart[idx] += 1
            rcost[idx] += R * disc
            if restart_log is not None:
                for i, mi in zip(idx, m[restart]):
                    restart_log[i].append((t, float(mi)))
        done = launch | abort
        if done.any():
            idx = act[done]
            t_end[idx] = t
            m_end[idx] = m[done]
            outcome[idx] = np.where(launch[done], 0, 1)
            terminal[act[launch]] = disc * np.maximum(profit.pi(m[launch]) - L, 0.0)
        return ~done

    keep = settle(0, z, m)
    act, z, m = act[keep], z[keep], m[keep]
    rows = np.arange(act.size)
    buf = None
    disc_prev = 1.0
    for k in range(n_steps):
        if act.size == 0:
            break
        col = k % cfg.chunk
        if col == 0:
            buf = np.empty((act.size, cfg.chunk))
            for j, i in enumerate(act):
                buf[j] = gens[i].standard_normal(cfg.chunk)
            rows = np.arange(act.size)
        z, m = step(z, m, buf[rows, col] * sqdt, params, dt)
        disc_next = math.exp(-r * (k + 1) * dt)
        flow[act] += c * (disc_prev - disc_next)
        disc_prev = disc_next
        keep = settle(k + 1, z, m)
        if not keep.all():
            act, z, m, rows = act[keep], z[keep], m[keep], rows[keep]
    m_end[act] = m
    payoff = terminal - flow - rcost
    return {
        "path_id": np.asarray(ids, dtype=np.int64),
        "outcome": outcome,
        "t_end": t_end,
        "launch_quality": m_end,
        "n_restarts": n_restart,
        "payoff": payoff,
        "terminal": terminal,
        "flow_cost": flow,
        "restart_cost": rcost,
        "restart_times": restart_log,
    }


def simulate_path(b: Boundary, params, profit, cfg: SimConfig, path_id: int = 0) -> PathResult:
    """Simulate one controlled path on the stream of ``path_id``."""
    cfg.validate(params.r)
    res = _run_block(b, params, profit, cfg, [path_id], record_restarts=True)
    return PathResult(
        outcome=_OUTCOMES[int(res["outcome"][0])],
        launch_quality=float(res["launch_quality"][0]),
        t_end=float(res["t_end"][0]),
        n_restarts=int(res["n_restarts"][0]),
        restart_times=[t for t, _ in res["restart_times"][0]],
        restart_qualities=[m for _, m in res["restart_times"][0]],
        discounted_payoff=float(res["payoff"][0]),
        terminal_value=float(res["terminal"][0]),
        flow_cost=float(res["flow_cost"][0]),
        restart_cost=float(res["restart_cost"][0]),
    )


def _threads():
    try:
        n = int(os.environ.get("GRITQUIT_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _estimate(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return Estimate(float("nan"), None)
    mean = float(np.sum(x) / x.size)
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else None
    return Estimate(mean, se)


def aggregate(paths) -> SimStats:
    n = paths["payoff"].size
    oc = paths["outcome"]
    launched = oc == 0
    hist = {int(k): int(v) for k, v in zip(*np.unique(paths["n_restarts"], return_counts=True))}
    return SimStats(
        n_paths=n,
        p_launch=_estimate(launched),
        p_abort=_estimate(oc == 1),
        p_capped=_estimate(oc == 2),
        mean_payoff=_estimate(paths["payoff"]),
        mean_launch_quality=_estimate(paths["launch_quality"][launched]),
        mean_time=_estimate(paths["t_end"]),
        restart_histogram=hist,
        paths=paths,
    )


def monte_carlo(b: Boundary, params, profit, cfg: SimConfig, threads: int | None = None) -> SimStats:
    """Estimate W(start_z, start_m) and outcome probabilities over ``cfg.n_paths`` paths."""
    cfg.validate(params.r)
    blocks = [np.arange(s, min(s + cfg.block, cfg.n_paths)) for s in range(0, cfg.n_paths, cfg.block)]
    threads = threads or _threads()
    run = lambda ids: _run_block(b, params, profit, cfg, ids)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(ids) for ids in blocks]
    keys = [k for k in parts[0] if k != "restart_times"]
    paths = {k: np.concatenate([p[k] for p in parts]) for k in keys}
    return aggregate(paths)
