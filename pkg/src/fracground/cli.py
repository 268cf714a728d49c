"""Command-line entry point: ``fracground <command> [options]``.

Every command prints its JSON report to stdout.  Commands that produce
tables, dumps or figures write them under ``--out`` as well.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .constants import extremal_u_delta, sharp_constants
from .errors import FracgroundError
from .extension import isometry_report
from .model import ModelParams, canonical_f, validate_hypotheses
from .runner import (CASE_TUPLES, FINE_DELTAS, SweepSpec, classify_regime, emit_plot_data,
                     run_asymptotics_case, run_sweep)
from .solver import SolveConfig, minimize_reduced, write_grid_dump
from .spectral import Field, Grid


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True)


def _write(path: str, text: str) -> str:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _pick(args, cfg, name, default=None, cast=float):
    """Command-line value, else config value, else default."""
    val = getattr(args, name, None)
    if val is None:
        val = cfg.get(name, default)
    if val is None:
        raise SystemExit(f"missing required value --{name}")
    return cast(val)


# Commands ------------------------------------------------------------------

def cmd_constants(args, cfg):
    s = _pick(args, cfg, "s")
    N = _pick(args, cfg, "N", cast=int)
    measured = bool(args.measured or cfg.get("measured", False))
    sc = sharp_constants(s, N, measured=measured)
    out = sc.to_dict()
    out["config"] = {"s": s, "N": N, "measured": measured}
    return out, []


def _model_params(args, cfg) -> ModelParams:
    p = dict(cfg.get("params", {}))
    for k in ("s", "q", "lam", "m"):
        v = getattr(args, k, None)
        if v is not None:
            p[k] = v
    if getattr(args, "N", None) is not None:
        p["N"] = args.N
    p.pop("two_star", None)
    try:
        return ModelParams(m=float(p.get("m", 1.0)), s=float(p["s"]), N=int(p["N"]),
                           lam=float(p.get("lam", 1.0)), q=float(p["q"]))
    except KeyError as exc:
        raise SystemExit(f"missing model parameter {exc}") from None


def cmd_validate_f(args, cfg):
    params = _model_params(args, cfg)
    kind = cfg.get("nonlinearity", "canonical")
    if kind != "canonical":
        raise SystemExit(f"unknown nonlinearity {kind!r}; only 'canonical' is available")
    rep = validate_hypotheses(canonical_f(params), params)
    out = rep.to_dict()
    out["config"] = {"params": params.to_dict(), "nonlinearity": kind}
    return out, []


def _extension_grid(N: int, cfg: dict) -> Grid:
    g = cfg.get("grid", {})
    n = int(g.get("n", 512 if N == 1 else 128))
    L = float(g.get("L", 20.0 if N == 1 else 10.0))
    return Grid(N, n, L)


def cmd_extension_check(args, cfg):
    s = _pick(args, cfg, "s")
    N = _pick(args, cfg, "N", cast=int)
    grid = _extension_grid(N, cfg)
    M = int(cfg.get("slices", 128))
    method = cfg.get("method", "auto")
    delta = float(cfg.get("delta", 1.0))
    traces = {"gaussian": Field(grid, np.exp(-grid.radius_sq()))}
    if N > 2 * s:
        traces["u_delta"] = extremal_u_delta(grid, s, delta)
    reports = {name: isometry_report(u, s, M=M, method=method) for name, u in traces.items()}
    out = {"traces": reports,
           "config": {"s": s, "N": N, "grid": grid.to_dict(), "slices": M, "method": method,
                      "delta": delta}}
    return out, []


def cmd_asymptotics(args, cfg):
    case = args.case or cfg.get("case")
    if case not in CASE_TUPLES:
        raise SystemExit(f"--case must be one of {', '.join(sorted(CASE_TUPLES))}")
    deltas = tuple(cfg.get("deltas", FINE_DELTAS))
    tol = float(cfg.get("tol", 0.15))
    res = run_asymptotics_case(case, deltas=deltas, tol=tol)
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.join(args.out, f"asymptotics_{case}")
    files = [_write(stem + ".csv", res.to_csv())]
    files += emit_plot_data(res, args.out)
    files += _figures(res, args.out)
    out = res.to_dict()
    out["config"] = {"case": case, "deltas": list(deltas), "tol": tol}
    files.append(_write(stem + ".json", dumps(out) + "\n"))
    return out, files


def cmd_solve(args, cfg):
    if not cfg:
        raise SystemExit("solve needs --config <file> with params and grid")
    cfg = dict(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    config = SolveConfig.from_dict(cfg)
    rep = minimize_reduced(config)
    os.makedirs(args.out, exist_ok=True)
    files = [os.path.join(args.out, "solve.bin")]
    write_grid_dump(files[0], rep.u_star, config.params.s)
    files += emit_plot_data(rep, args.out)
    files += _figures(rep, args.out)
    out = rep.to_dict()
    out["regime"] = classify_regime(config.params.N, config.params.s, config.params.q).to_dict()
    files.append(_write(os.path.join(args.out, "solve.json"), dumps(out) + "\n"))
    return out, files


def cmd_sweep(args, cfg):
    if not cfg:
        raise SystemExit("sweep needs --config <file> with the parameter lists")
    cfg = dict(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    spec = SweepSpec.from_dict(cfg)
    rep = run_sweep(spec, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    files = [_write(os.path.join(args.out, "sweep.csv"), rep.to_csv())]
    files += emit_plot_data(rep, args.out)
    files += _figures(rep, args.out)
    out = rep.to_dict()
    files.append(_write(os.path.join(args.out, "sweep.json"), dumps(out) + "\n"))
    return out, files


def _figures(report, out_dir):
    from . import plotting  # matplotlib is only loaded when figures are drawn

    return plotting.render(report, out_dir)


COMMANDS = {
    "constants": cmd_constants,
    "validate-f": cmd_validate_f,
    "extension-check": cmd_extension_check,
    "asymptotics": cmd_asymptotics,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
}


def _global_flags(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="JSON configuration file")
    p.add_argument("--out", default=d("out"), help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=d(None), help="master seed")
    p.add_argument("--workers", type=int, default=d(1), help="parallel workers for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracground",
                                     description="Spectral solver and checks for (-Delta)^s u + m u = f(u).")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("constants", "sharp constants and the critical threshold")
    p.add_argument("--s", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--measured", action="store_true",
                   help="extrapolate the bubble quotient instead of using the closed form")

    p = add("validate-f", "numerical check of the growth hypotheses")
    for k in ("s", "q", "lam", "m"):
        p.add_argument(f"--{k}", type=float)
    p.add_argument("--N", type=int)

    p = add("extension-check", "extension isometry and Neumann trace")
    p.add_argument("--s", type=float)
    p.add_argument("--N", type=int)

    p = add("asymptotics", "exponent fits for one of the cases i..v")
    p.add_argument("--case", choices=sorted(CASE_TUPLES))

    add("solve", "ground-state solve from a JSON config")
    add("sweep", "parameter sweep from a JSON config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _load_config(args.config)
    try:
        out, files = COMMANDS[args.command](args, cfg)
    except FracgroundError as exc:
        print(f"fracground {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if not files:
        os.makedirs(args.out, exist_ok=True)
        files = [_write(os.path.join(args.out, f"{args.command}.json"), dumps(out) + "\n")]
    print(dumps(out))
    for f in files:
        print(f"wrote {f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
