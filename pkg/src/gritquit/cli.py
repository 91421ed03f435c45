"""Command-line front end: ``gritquit {solve,value,simulate,verify,sweep}``.

Configuration precedence is CLI flag > config file > benchmark defaults. Every
command writes ``manifest.json`` next to its artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from .boundary import Boundary, BoundaryError, solve_boundary
from .model import (
    BENCHMARK_PARAMS,
    BENCHMARK_PROFIT,
    GritQuitError,
    ValidationError,
    from_flat_dict,
    gamma_roots,
    read_config_mapping,
    to_flat_dict,
    validate_params,
)
from .simulate import SimConfig, SimConfigError, monte_carlo
from .sweeps import StageMissing, sweep
from .value import value_surface, value_surface_csv
from . import verify as verify_mod

EXIT_OK, EXIT_CHECKS_FAILED, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3

# run options a config file may carry alongside the model parameters
RUN_DEFAULTS = {
    "grid_step": None,
    "tol": 1e-10,
    "dt": 1e-3,
    "paths": 10_000,
    "seed": 0,
    "t_max": None,
    "start_z": 0.0,
    "start_m": 0.0,
    "m_res": 60,
    "z_res": 40,
    "param": "R",
    "rel_step": 0.01,
}
_CASTS = {"grid_step": float, "tol": float, "dt": float, "paths": int, "seed": int, "t_max": float,
          "start_z": float, "start_m": float, "m_res": int, "z_res": int, "param": str, "rel_step": float}


class InputError(Exception):
    pass


def _add_common(p, *names):
    p.add_argument("--config", type=Path, help="JSON or key = value file")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--grid-step", dest="grid_step", type=float)
    if "sim" in names:
        p.add_argument("--seed", type=int)
        p.add_argument("--paths", type=int)
        p.add_argument("--dt", type=float)
    if "boundary" in names:
        p.add_argument("--boundary", type=Path, help="boundary.json from a previous solve")


def build_parser():
    ap = argparse.ArgumentParser(prog="gritquit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"gritquit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("solve", help="solve the free boundary"))

    p = sub.add_parser("value", help="value surface on an (m, z) grid")
    _add_common(p, "boundary")
    p.add_argument("--m-res", dest="m_res", type=int)
    p.add_argument("--z-res", dest="z_res", type=int)

    p = sub.add_parser("simulate", help="Monte Carlo under the optimal policy")
    _add_common(p, "sim", "boundary")
    p.add_argument("--start-z", dest="start_z", type=float)
    p.add_argument("--start-m", dest="start_m", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--per-path", action="store_true", help="also write paths.csv")

    p = sub.add_parser("verify", help="acceptance-grade diagnostics; exit 0 iff all pass")
    _add_common(p, "sim")
    p.add_argument("--rel-step", dest="rel_step", type=float)

    p = sub.add_parser("sweep", help="comparative statics for one parameter")
    _add_common(p)
    p.add_argument("--param", choices=("R", "L", "qbar"))
    p.add_argument("--rel-step", dest="rel_step", type=float)
    return ap


def resolve(args):
    """Merge defaults, config file and flags; returns (params, profit, options, raw config)."""
    raw = {}
    if args.config is not None:
        try:
            raw = read_config_mapping(args.config)
            if isinstance(raw.get("config"), dict) and "command" in raw:
                raw = raw["config"]  # a previous run's manifest
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON in {args.config}: {exc}") from exc
    model = {k: v for k, v in raw.items() if k not in RUN_DEFAULTS}
    opts = dict(RUN_DEFAULTS)
    for k, v in raw.items():
        if k in RUN_DEFAULTS and v is not None and str(v).strip().lower() not in ("", "none", "null"):
            try:
                opts[k] = _CASTS[k](v)
            except ValueError as exc:
                raise InputError(f"config key {k}: {exc}") from exc
    for k in RUN_DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
    params, profit = from_flat_dict(model, (BENCHMARK_PARAMS, BENCHMARK_PROFIT))
    validate_params(params, profit)
    if opts["param"] not in ("R", "L", "qbar"):
        raise InputError(f"param must be one of R, L, qbar; got {opts['param']!r}")
    return params, profit, opts, raw


def _write(out: Path, name: str, text: str, artifacts: list):
    path = out / name
    path.write_text(text, encoding="utf-8", newline="\n")
    artifacts.append(name)


def _boundary(args, params, profit, opts, timings):
    t = time.perf_counter()
    path = getattr(args, "boundary", None)
    if path is not None:
        try:
            b = Boundary.from_json(Path(path).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"cannot read boundary {path}: {exc}") from exc
    else:
        b = solve_boundary(params, profit, grid_step=opts["grid_step"], tol=opts["tol"])
    timings["boundary"] = time.perf_counter() - t
    return b


def cmd_solve(args, params, profit, opts, out, artifacts, timings, meta):
    b = _boundary(args, params, profit, opts, timings)
    _write(out, "boundary.csv", b.to_csv(), artifacts)
    _write(out, "boundary.json", b.to_json(), artifacts)
    meta.update({"grid_step": b.meta["grid_step"], "tol": b.meta["tol"], "m0": b.m0, "m1": b.m1,
                 "m_star": b.m_star, "z_star_0": b.z0})
    print(f"m0={b.m0:.10g} m1={b.m1:.10g} m*={b.m_star:.10g} z*(0)={b.z0:.10g}")
    return EXIT_OK


def cmd_value(args, params, profit, opts, out, artifacts, timings, meta):
    b = _boundary(args, params, profit, opts, timings)
    t = time.perf_counter()
    surf = value_surface(b, params, profit, gamma_roots(params), m_res=opts["m_res"], z_res=opts["z_res"])
    timings["value"] = time.perf_counter() - t
    _write(out, "value_surface.csv", value_surface_csv(surf), artifacts)
    if getattr(args, "boundary", None) is None:
        _write(out, "boundary.csv", b.to_csv(), artifacts)
    meta.update({"m_res": opts["m_res"], "z_res": opts["z_res"], "grid_step": b.meta.get("grid_step")})
    print(f"value surface {opts['m_res']}x{opts['z_res']} written")
    return EXIT_OK


def cmd_simulate(args, params, profit, opts, out, artifacts, timings, meta):
    b = _boundary(args, params, profit, opts, timings)
    cfg = SimConfig(dt=opts["dt"], n_paths=opts["paths"], seed=opts["seed"], t_max=opts["t_max"],
                    start_z=opts["start_z"], start_m=opts["start_m"])
    try:
        cfg.validate(params.r)
    except SimConfigError as exc:
        raise InputError(str(exc)) from exc
    t = time.perf_counter()
    stats = monte_carlo(b, params, profit, cfg)
    timings["simulate"] = time.perf_counter() - t
    _write(out, "sim_stats.json", stats.to_json(), artifacts)
    if args.per_path:
        _write(out, "paths.csv", stats.paths_csv(), artifacts)
    meta.update({"dt": cfg.dt, "n_paths": cfg.n_paths, "seed": cfg.seed, "t_max": cfg.horizon(params.r),
                 "start_z": cfg.start_z, "start_m": cfg.start_m, "grid_step": b.meta.get("grid_step")})
    mp = stats.mean_payoff
    print(f"mean payoff {mp.mean:.6g} (se {mp.se if mp.se is None else format(mp.se, '.3g')}), "
          f"P(launch) {stats.p_launch.mean:.4g}, P(abort) {stats.p_abort.mean:.4g}")
    return EXIT_OK


def cmd_verify(args, params, profit, opts, out, artifacts, timings, meta):
    # acceptance-grade default unless the flag or the config sets a count
    paths = opts["paths"] if args.paths is not None or "paths" in meta["_raw"] else 200_000

    def progress(res):
        timings[res.name] = res.seconds
        print(f"{res.name:<18} {'PASS' if res.passed else 'FAIL'}  ({res.seconds:.1f} s)", flush=True)

    rep = verify_mod.run_all(params, profit, grid_step=opts["grid_step"], n_paths=paths, dt=opts["dt"],
                             seed=opts["seed"], rel_step=opts["rel_step"], progress=progress)
    _write(out, "verify_report.json", rep.to_json(), artifacts)
    _write(out, "verify_report.txt", rep.table(), artifacts)
    meta.update({"n_paths": paths, "dt": opts["dt"], "seed": opts["seed"], "rel_step": opts["rel_step"],
                 "passed": rep.passed})
    sys.stdout.write(rep.table())
    return EXIT_OK if rep.passed else EXIT_CHECKS_FAILED


def cmd_sweep(args, params, profit, opts, out, artifacts, timings, meta):
    t = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StageMissing)
        rep = sweep(params, profit, opts["param"], rel_step=opts["rel_step"], grid_step=opts["grid_step"],
                    tol=opts["tol"])
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    timings["sweep"] = time.perf_counter() - t
    _write(out, "sweep.json", rep.to_json(), artifacts)
    _write(out, "sweep.txt", rep.table(), artifacts)
    meta.update({"param": opts["param"], "rel_step": opts["rel_step"], "grid_step": opts["grid_step"],
                 "tol": opts["tol"], "passed": rep.passed})
    sys.stdout.write(rep.table())
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "value": cmd_value, "simulate": cmd_simulate, "verify": cmd_verify,
            "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        params, profit, opts, raw = resolve(args)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"invalid input: {type(v).__name__}: {v}", file=sys.stderr)
        return EXIT_INVALID
    except InputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID

    out = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"invalid input: cannot create {out}: {exc}", file=sys.stderr)
        return EXIT_INVALID

    artifacts, timings, meta = [], {}, {"_raw": raw}
    try:
        code = COMMANDS[args.command](args, params, profit, opts, out, artifacts, timings, meta)
    except InputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as exc:
        for v in exc.violations:
            print(f"invalid input: {type(v).__name__}: {v}", file=sys.stderr)
        return EXIT_INVALID
    except (BoundaryError, GritQuitError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    meta.pop("_raw", None)
    timings["total"] = time.perf_counter() - t0

    config = to_flat_dict(params, profit)
    config.update({k: v for k, v in opts.items()})
    manifest = {
        "command": args.command,
        "argv": list(sys.argv[1:] if argv is None else argv),
        "config": config,
        "metadata": meta,
        "artifacts": sorted(artifacts + ["manifest.json"]),
        "timings_s": timings,
        "version": __version__,
        "exit_code": code,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
