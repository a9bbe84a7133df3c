"""Command-line entry point: ``groupsel fit | simulate | bounds``.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from ..distributions import RegionError
from ..inference import DegenerateStatisticError
from ..linalg import InvalidInputError
from ..stepwise import SelectionError, StepwiseConfig, penalty_for
from .data import ANALYSIS_COLUMNS, format_bound_table, load_csv, run_analysis
from .report import emit_report
from .simulate import SimulationConfig, run_simulation

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class InputError(Exception):
    pass


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _sigma(text):
    if text.lower() == "unknown":
        return "unknown"
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--sigma takes a positive number or 'unknown'")
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("--sigma must be positive")
    return v


def _penalty(text):
    key = text.lower()
    if key in ("aic", "bic", "ric"):
        return key
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--k takes a number or aic/bic/ric")
    if v < 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("--k must be finite and >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupsel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="select groups on a CSV dataset and test them")
    fit.add_argument("--csv", required=True, help="data file with a header row")
    fit.add_argument("--groups", help="predictor,group map (default: singleton groups)")
    fit.add_argument("--outcome", help="response column (default: first column)")
    fit.add_argument("--sigma", type=_sigma, default="unknown",
                     help="known noise scale, or 'unknown' for the F test (default)")
    fit.add_argument("--k", type=_penalty, default="bic", help="penalty: number or aic/bic/ric")
    stop = fit.add_mutually_exclusive_group()
    stop.add_argument("--steps", type=int, help="run exactly N steps")
    stop.add_argument("--aic-stop", type=int, metavar="S_PLUS",
                      help="stop once the criterion rises S_PLUS times in a row (default 1)")
    fit.add_argument("--max-steps", type=int, help="step limit under --aic-stop")
    fit.add_argument("--no-intercept", action="store_true", help="do not center the data")
    fit.add_argument("--standardize", action="store_true", help="scale predictors to unit sd")
    fit.add_argument("--out", default="-", help="output path ('-' for stdout)")
    fit.add_argument("--format", choices=("tsv", "json"), default="tsv")

    sim = sub.add_parser("simulate", help="run a seeded Monte Carlo experiment")
    sim.add_argument("--config", help="JSON file with SimulationConfig fields")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", required=True)
    sim.add_argument("--format", choices=("tsv", "json"), default="json")

    bounds = sub.add_parser("bounds", help="screening bounds for the largest chi-square")
    bounds.add_argument("--G", type=_int_list, default=[10, 20, 50, 100, 1000])
    bounds.add_argument("--k", type=_int_list, default=[2, 5, 10, 50])
    bounds.add_argument("--eps", type=_float_list, default=[0.01, 0.1])
    return parser


def _write(text, path):
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _pfmt(p):
    return "nan" if p is None or math.isnan(p) else f"{p:.3g}" if p >= 1e-3 else f"{p:.2e}"


def format_analysis(rows, fmt: str) -> str:
    if fmt == "json":
        clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()}
                 for r in rows]
        return json.dumps(clean, indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(ANALYSIS_COLUMNS)
    for r in rows:
        w.writerow([r["step"], r["group"], _pfmt(r["naive"]), _pfmt(r["selective"])])
    return buf.getvalue()


def cmd_fit(args) -> int:
    ds = load_csv(args.csv, args.groups, outcome=args.outcome, standardize=args.standardize)
    k = penalty_for(args.k, ds.n, ds.design.p)
    sigma = None if args.sigma == "unknown" else args.sigma
    intercept = not args.no_intercept
    if args.steps is not None:
        if args.max_steps is not None:
            raise InputError("--max-steps only applies with --aic-stop")
        cfg = StepwiseConfig(k=k, sigma=sigma, max_steps=args.steps, stop="fixed",
                             intercept=intercept)
    else:
        max_steps = args.max_steps if args.max_steps is not None else ds.G
        cfg = StepwiseConfig(k=k, sigma=sigma, max_steps=max_steps, stop="aic",
                             s_plus=args.aic_stop or 1, intercept=intercept)
    rows = run_analysis(ds, cfg, sigma if sigma is not None else "unknown")
    _write(format_analysis(rows, args.format), args.out)
    failed = [r for r in rows if r["error"]]
    for r in failed:
        print(f"groupsel: test for {r['group']} failed: {r['error']}", file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_simulate(args) -> int:
    fields = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                fields = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(fields, dict):
            raise InputError("config must be a JSON object")
        if "schema_version" not in fields:
            raise InputError("config is missing schema_version")
    if args.seed is not None:
        fields["seed"] = args.seed
    if args.reps is not None:
        fields["reps"] = args.reps
    cfg = SimulationConfig.from_dict(fields)
    report = run_simulation(cfg, workers=args.workers)
    emit_report(report, args.format, args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    if not args.G or not args.k or not args.eps:
        raise InputError("--G, --k and --eps need at least one value each")
    if any(g < 1 for g in args.G) or any(k < 1 for k in args.k) \
            or any(not 0 < e < 1 for e in args.eps):
        raise InputError("need G >= 1, k >= 1 and 0 < eps < 1")
    _write("\n".join(format_bound_table(args.G, args.k, e) for e in args.eps), "-")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    handler = {"fit": cmd_fit, "simulate": cmd_simulate, "bounds": cmd_bounds}[args.command]
    try:
        return handler(args)
    except (RegionError, DegenerateStatisticError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"groupsel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, InvalidInputError, SelectionError, ValueError, OSError) as exc:
        print(f"groupsel: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
