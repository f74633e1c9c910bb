"""Command-line interface: fit, simulate, and bench subcommands."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .blockdescent import FitOptions, FitReport, fit_l2e
from .data import Dataset, NumericalOverflowError
from .experiments import (
    DISTANCE_RHO,
    ISOTONIC_METHODS,
    SPARSE_METHODS,
    IsotonicScenario,
    SparseScenario,
    parse_config,
    run_replicates,
)
from .newton import NewtonOptions
from .penalties import Penalty
from .projections import ConstraintSet

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3

PENALTY_CHOICES = ("none", "lasso", "mcp", "isotonic", "distance-sparse")


class InputError(Exception):
    pass


def _build_penalty(args) -> Penalty:
    if args.penalty == "none":
        return Penalty.none()
    if args.penalty == "lasso":
        if args.lam is None:
            raise InputError("--penalty lasso requires --lambda")
        return Penalty.lasso(args.lam)
    if args.penalty == "mcp":
        if args.lam is None:
            raise InputError("--penalty mcp requires --lambda")
        return Penalty.mcp(args.lam, args.gamma)
    if args.penalty == "isotonic":
        return Penalty.indicator(ConstraintSet.isotonic())
    if args.penalty == "distance-sparse":
        if args.k is None:
            raise InputError("--penalty distance-sparse requires --k")
        return Penalty.distance(args.rho, ConstraintSet.sparse(args.k))
    raise InputError(f"unknown penalty {args.penalty!r}")


def _read_csv(path: str, response: str, add_intercept: bool) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise InputError(f"{path}: empty file")
            header = [h.strip() for h in header]
            if response not in header:
                raise InputError(f"{path}: no column named {response!r}")
            rows = []
            for lineno, row in enumerate(reader, 2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise InputError(f"{path}:{lineno}: expected {len(header)} fields")
                try:
                    rows.append([float(v) for v in row])
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise InputError(str(exc)) from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    yi = header.index(response)
    y = arr[:, yi]
    X = np.delete(arr, yi, axis=1)
    if X.shape[1] == 0 and not add_intercept:
        raise InputError(f"{path}: no predictor columns")
    if add_intercept:
        X = np.column_stack([np.ones(arr.shape[0]), X]) if X.shape[1] else np.ones((arr.shape[0], 1))
    return Dataset(y=y, X=X)


def _report_dict(report: FitReport) -> dict:
    return {
        "beta": [float(b) for b in report.beta],
        "eta": float(report.eta),
        "tau": float(math.exp(report.eta)),
        "weights": [float(w) for w in report.weights],
        "loss_trace": [float(v) for v in report.loss_trace],
        "outer_iters": int(report.outer_iters),
        "inner_beta_iters": [int(v) for v in report.inner_beta_iters],
        "inner_eta_iters": [int(v) for v in report.inner_eta_iters],
        "converged": bool(report.converged),
        "precision_diverged": bool(report.precision_diverged),
    }


def cmd_fit(args) -> int:
    pen = _build_penalty(args)
    data = _read_csv(args.input, args.response, args.add_intercept)
    opts = FitOptions(
        max_outer=args.max_outer,
        outer_tol=args.tol,
        newton=NewtonOptions(),
    )
    try:
        report = fit_l2e(data, pen, opts)
    except (NumericalOverflowError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    out = Path(args.output)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(_report_dict(report), fh, indent=2)
        fh.write("\n")
    weights_path = out.with_suffix(".weights.csv")
    r = data.y - data.X @ report.beta
    with open(weights_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("case,residual,weight,log_weight\n")
        for i in range(data.n):
            fh.write(f"{i},{r[i]!r},{report.weights[i]!r},{math.log(report.weights[i])!r}\n")
    print(f"wrote {out} and {weights_path}")
    return EXIT_OK


def _scenario_from_args(args):
    cfg = parse_config(args.config) if args.config else {}

    def pick(name, cast, default):
        if getattr(args, name, None) is not None:
            return cast(getattr(args, name))
        if name in cfg:
            return cast(cfg[name])
        return default

    if args.family == "isotonic":
        scenario = IsotonicScenario(
            n=pick("n", int, 1000),
            m=pick("m", int, 100),
            shift=pick("shift", float, 14.0),
            seed=args.seed,
        )
        default_methods = ISOTONIC_METHODS
    else:
        scenario = SparseScenario(
            n=pick("n", int, 200),
            p=pick("p", int, 50),
            m=pick("m", int, 20),
            shift=pick("shift", float, 5.0),
            tau_true=pick("tau", float, 1.0),
            seed=args.seed,
        )
        default_methods = SPARSE_METHODS
    methods = args.methods.split(",") if args.methods else list(default_methods)
    for m in methods:
        if m not in default_methods:
            raise InputError(f"unknown method {m!r} for {args.family} scenarios")
    return scenario, methods


def _print_table(aggregates: dict) -> None:
    keys = ("mean_mse", "median_mse", "mean_f1", "mean_outer_iters")
    print(f"{'method':<10}" + "".join(f"{k:>18}" for k in keys))
    for method, stats in aggregates.items():
        cells = "".join(
            f"{stats[k]:>18.6g}" if k in stats else f"{'-':>18}" for k in keys
        )
        print(f"{method:<10}{cells}")


def cmd_simulate(args) -> int:
    scenario, methods = _scenario_from_args(args)
    summary = run_replicates(
        scenario, methods, n_reps=args.reps, seed=args.seed, cv=args.cv, jobs=args.jobs
    )
    prefix = Path(args.out)
    summary.write_csv(prefix.with_suffix(".csv"))
    summary.write_json(prefix.with_suffix(".json"))
    summary.write_csv(prefix.with_suffix(".timing.csv"), include_timing=True)
    _print_table(summary.aggregates)
    print(f"wrote {prefix.with_suffix('.csv')}, {prefix.with_suffix('.json')}")
    return EXIT_OK


def cmd_bench(args) -> int:
    scenario, methods = _scenario_from_args(args)
    summary = run_replicates(
        scenario, methods, n_reps=args.reps, seed=args.seed, cv=args.cv, jobs=args.jobs
    )
    out = Path(args.out).with_suffix(".bench.csv")
    cols = ("replicate", "method", "outer_iters", "mean_inner_beta", "mean_inner_eta", "runtime")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row in summary.rows:
            if "error" in row:
                continue
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols) + "\n")
    for method, stats in summary.aggregates.items():
        if "mean_outer_iters" in stats:
            print(
                f"{method}: outer={stats['mean_outer_iters']:.2f} "
                f"inner_beta={stats['mean_mean_inner_beta']:.2f} "
                f"inner_eta={stats['mean_mean_inner_eta']:.2f}"
            )
    print(f"wrote {out}")
    return EXIT_OK


def _add_scenario_flags(sub):
    sub.add_argument("family", choices=("isotonic", "sparse"))
    sub.add_argument("--config", help="key = value scenario config file")
    sub.add_argument("--n", type=int)
    sub.add_argument("--p", type=int)
    sub.add_argument("--m", type=int)
    sub.add_argument("--shift", type=float)
    sub.add_argument("--tau", type=float)
    sub.add_argument("--methods", help="comma-separated method names")
    sub.add_argument("--reps", type=int, default=20)
    sub.add_argument("--cv", action="store_true", help="5-fold CV for tuning parameters")
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", default="experiment", help="output path prefix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l2ereg", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="fit a robust regression from a CSV file")
    fit.add_argument("input", help="input CSV with a header row")
    fit.add_argument("--response", required=True, help="name of the response column")
    fit.add_argument("--penalty", choices=PENALTY_CHOICES, default="none")
    fit.add_argument("--lambda", dest="lam", type=float)
    fit.add_argument("--gamma", type=float, default=3.0)
    fit.add_argument("--k", type=int)
    fit.add_argument("--rho", type=float, default=DISTANCE_RHO)
    fit.add_argument("--add-intercept", action="store_true")
    fit.add_argument("--tol", type=float, default=1e-8)
    fit.add_argument("--max-outer", type=int, default=100)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--output", default="fit.json")
    fit.set_defaults(func=cmd_fit)

    sim = subs.add_parser("simulate", help="run replicate simulations")
    _add_scenario_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    bench = subs.add_parser("bench", help="emit per-method iteration and timing stats")
    _add_scenario_flags(bench)
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalOverflowError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
