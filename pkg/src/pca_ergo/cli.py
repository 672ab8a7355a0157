"""Command-line front door.

Every subcommand is deterministic given --seed.  Exit codes: 0 success,
2 invalid input, 3 degenerate closed-form denominator, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import envelope as env
from . import refined, sweep, walk
from .params import (BState, DegenerateDenominatorError, ParamQuad, Side,
                     asymptotic_increment_bound, boundary_chain, ca_with_error,
                     condition_check, derive, gamma_table, stationary_solve)

DEFAULT_SEED = 20230901

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_BAD_INPUT):
        super().__init__(message)
        self.code = code


def _parse_quad(args) -> ParamQuad:
    has_params = getattr(args, "params", None) is not None
    has_ca = getattr(args, "ca", None) is not None
    if has_params == has_ca:
        raise CliError("supply exactly one of --params or --ca/--eps")
    if has_params:
        parts = args.params.split(",")
        if len(parts) != 4:
            raise CliError("--params needs four comma-separated probabilities")
        try:
            vals = [float(v) for v in parts]
            return ParamQuad(*vals)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    if getattr(args, "eps", None) is None:
        raise CliError("--ca requires --eps")
    try:
        return ca_with_error(args.ca, args.eps)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text if text.endswith("\n") else text + "\n")
        except OSError as exc:
            raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from exc
    else:
        print(text)


def _side(name: str) -> Side:
    return Side.RIGHT if name == "right" else Side.LEFT


def cmd_derive(args) -> int:
    d = derive(_parse_quad(args))
    payload = {
        "params": list(d.quad.as_tuple()),
        "p": d.p, "q": d.q, "r": d.r,
        "p_i_x": [list(row) for row in d.pp],
        "q_i_x": [list(row) for row in d.qq],
        "r_i_x": [list(row) for row in d.rr],
        "P_i_x": [list(row) for row in d.PP],
        "Q_i_x": [list(row) for row in d.QQ],
        "R_x": list(d.RR),
    }
    _emit(args, json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_check(args) -> int:
    rep = condition_check(derive(_parse_quad(args)))
    _emit(args, json.dumps(rep.to_dict(), indent=2))
    return EXIT_OK


def cmd_gamma(args) -> int:
    d = derive(_parse_quad(args))
    payload = {"gamma0": gamma_table(d, Side.RIGHT),
               "gamma1": gamma_table(d, Side.LEFT)}
    _emit(args, json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_chain(args) -> int:
    d = derive(_parse_quad(args))
    chain = boundary_chain(d, _side(args.side))
    nu = stationary_solve(chain)
    payload = {
        "side": args.side,
        "rows": {str(s): list(map(float, chain.rows[s.value]))
                 for s in BState},
        "stationary": {str(s): nu[s] for s in BState},
    }
    _emit(args, json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_drift(args) -> int:
    d = derive(_parse_quad(args))
    side = _side(args.side)
    if d.r <= 0.0:
        raise CliError("drift analysis requires r > 0")
    payload = {"side": args.side,
               "bound": asymptotic_increment_bound(d, side)}
    if args.mc_steps:
        est = walk.empirical_drift(d, side, steps=args.mc_steps,
                                   burn_in=args.burn_in, seed=args.seed)
        payload["mc_mean"] = est.mean
        payload["mc_stderr"] = est.stderr
        payload["mc_steps"] = est.steps
        payload["seed"] = est.seed
    _emit(args, json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_island(args) -> int:
    d = derive(_parse_quad(args))
    traj = walk.simulate_island(d, n0=args.gap, horizon=args.horizon,
                                seed=args.seed)
    if args.out:
        try:
            walk.trajectory_to_csv(traj, args.out)
        except OSError as exc:
            raise CliError(str(exc), EXIT_IO) from exc
    else:
        last = traj[-1]
        print(json.dumps({"steps": last.t, "gap": last.j - last.i,
                          "alive": last.alive, "seed": args.seed}))
    return EXIT_OK


def cmd_envelope(args) -> int:
    d = derive(_parse_quad(args))
    hit, density = env.run_to_decorrelation(d, n=args.cells,
                                            max_steps=args.max_steps,
                                            seed=args.seed)
    if args.pgm:
        series = env.run_envelope_series(
            d, n=args.cells,
            steps=hit if hit is not None else args.max_steps,
            seed=args.seed)
        try:
            env.write_pgm(env.raster(series), args.pgm)
        except OSError as exc:
            raise CliError(str(exc), EXIT_IO) from exc
    if args.out:
        try:
            env.density_to_csv(density, args.out)
        except OSError as exc:
            raise CliError(str(exc), EXIT_IO) from exc
    print(json.dumps({"hit_time": hit, "cells": args.cells,
                      "seed": args.seed}))
    return EXIT_OK


def cmd_ca1000(args) -> int:
    try:
        payload = {
            "eps": args.eps,
            "mean_s1": refined.mean_s1(args.eps),
            "mean_00": refined.mean_00(args.eps),
            "drift_bound": refined.refined_drift_bound(args.eps),
        }
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if args.mc_steps:
        est = refined.simulate_refined(args.eps, steps=args.mc_steps,
                                       burn_in=args.burn_in, seed=args.seed)
        payload["mc_mean"] = est.mean
        payload["mc_stderr"] = est.stderr
        payload["seed"] = est.seed
    _emit(args, json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    codes = args.codes.split(",") if args.codes else sweep.ALL_CODES
    grid = [float(v) for v in args.grid.split(",")]
    if any(not (0.0 < e <= 0.5) for e in grid):
        raise CliError("sweep grid values must lie in (0, 1/2]")
    rows = sweep.epsilon_sweep(codes, grid)
    text = (sweep.sweep_rows_to_json(rows) if args.format == "json"
            else sweep.sweep_rows_to_csv(rows))
    _emit(args, text)
    return EXIT_OK


def cmd_volume(args) -> int:
    est = sweep.volume_estimate(args.samples, seed=args.seed, jobs=args.jobs)
    text = (est.to_csv() if args.format == "csv"
            else json.dumps(est.to_dict(), indent=2))
    _emit(args, text)
    return EXIT_OK


def _add_param_flags(sp) -> None:
    sp.add_argument("--params", help="p00,p01,p10,p11")
    sp.add_argument("--ca", help="4-bit rule code, e.g. 0011")
    sp.add_argument("--eps", type=float, help="error rate for --ca")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pca-ergo",
        description="Ergodicity toolkit for two-neighbour binary PCA")
    ap.add_argument("--config", help="JSON file of default flag values")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--out", help="output file (default: stdout)")
        return sp

    sp = add("derive", cmd_derive, "derived min/max/rest quantities")
    _add_param_flags(sp)

    sp = add("check", cmd_check, "evaluate the ergodicity condition")
    _add_param_flags(sp)

    sp = add("gamma", cmd_gamma, "closed-form gamma values per side")
    _add_param_flags(sp)

    sp = add("chain", cmd_chain, "boundary-state chain and its stationary law")
    _add_param_flags(sp)
    sp.add_argument("--side", choices=["right", "left"], default="right")

    sp = add("drift", cmd_drift, "analytic drift bound, optional Monte Carlo")
    _add_param_flags(sp)
    sp.add_argument("--side", choices=["right", "left"], default="right")
    sp.add_argument("--mc-steps", type=int, default=0)
    sp.add_argument("--burn-in", type=int, default=1000)

    sp = add("island", cmd_island, "simulate one decorrelated island")
    _add_param_flags(sp)
    sp.add_argument("--gap", type=int, default=10, help="initial gap (>= 3)")
    sp.add_argument("--horizon", type=int, default=10 ** 4)

    sp = add("envelope", cmd_envelope, "?-extinction run on a ring")
    _add_param_flags(sp)
    sp.add_argument("--cells", type=int, default=200)
    sp.add_argument("--max-steps", type=int, default=10 ** 5)
    sp.add_argument("--pgm", help="write a space-time raster here")

    sp = add("ca1000", cmd_ca1000, "refined rule-1000 means and bound")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--mc-steps", type=int, default=0)
    sp.add_argument("--burn-in", type=int, default=1000)

    sp = add("sweep", cmd_sweep, "condition sweep over rule codes")
    sp.add_argument("--codes", help="comma-separated codes (default: all 16)")
    sp.add_argument("--grid", default="0.01,0.05,0.1,0.2,0.3,0.4,0.5")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--jobs", type=int, default=1)

    sp = add("volume", cmd_volume, "Monte Carlo volume of the condition region")
    sp.add_argument("--samples", type=int, default=10 ** 6)
    sp.add_argument("--format", choices=["csv", "json"], default="json")
    sp.add_argument("--jobs", type=int, default=1)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list) -> list:
    """Fold --config file values in as defaults; explicit flags win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        raise CliError("--config needs a path")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_IO)
    except json.JSONDecodeError as exc:
        raise CliError(f"bad config JSON in {path}: {exc}")
    rest = argv[:idx] + argv[idx + 2:]
    if not rest:
        raise CliError("--config given without a subcommand")
    head, tail = rest[:1], rest[1:]
    injected = []
    for key, value in cfg.items():
        flag = "--" + key.replace("_", "-")
        if flag in tail:
            continue
        injected.extend([flag, str(value)])
    return head + injected + tail


def main(argv: list | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        argv = _apply_config(ap, argv)
        args = ap.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DegenerateDenominatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
