"""Command-line interface: simulate, moments, fit, reliability."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .empirical import empirical_moment_set
from .errors import NumericalError, ValidationError
from .fit import AbcConfig, fit_pipeline
from .formats import (dumps, file_digest, read_json, read_params, read_trace, report_csv,
                      write_draws, write_json, write_trace)
from .moments import theoretical_moment_set
from .reliability import estimate
from .simulate import RngStream, simulate_trace

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bimmpp", description="Bivariate MMPP(2) failure models for time and distance data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a stationary trace")
    p.add_argument("--params", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("moments", help="theoretical or empirical moment set")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--params")
    src.add_argument("--trace")
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("fit", help="two-step fit of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--restarts", type=_positive_int, default=100)
    p.add_argument("--abc-iters", type=_positive_int, default=10000)
    p.add_argument("--accept", type=float, default=0.01)
    p.add_argument("--distance", choices=("three", "four"), default="three")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-draws", help="CSV of the accepted (lambda3, omega3, distance) draws")

    p = sub.add_parser("reliability", help="Monte Carlo reliability measures")
    p.add_argument("--params", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--reps", type=_positive_int, default=1000)
    p.add_argument("--n-per-rep", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also write a long-format CSV")
    return parser


def _write_manifest(args, inputs: dict) -> None:
    # threads is left out on purpose: outputs do not depend on it
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "threads")}
    manifest = {
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "inputs": {name: {"path": str(path), "sha256": file_digest(path)} for name, path in inputs.items()},
    }
    write_json(f"{args.out}.manifest.json", manifest)


def _simulate(args) -> dict:
    params = read_params(args.params)
    write_trace(args.out, simulate_trace(params, args.n, RngStream(args.seed)))
    return {"params": args.params}


def _moments(args) -> dict:
    if args.params:
        ms, inputs = theoretical_moment_set(read_params(args.params)), {"params": args.params}
    else:
        ms, inputs = empirical_moment_set(read_trace(args.trace)), {"trace": args.trace}
    out = {**ms.to_dict(), "degenerate": list(ms.degenerate)}
    if args.out:
        write_json(args.out, out)
    else:
        sys.stdout.write(dumps(out))
    return inputs


def _fit(args) -> dict:
    trace = read_trace(args.trace)
    cfg = AbcConfig(args.abc_iters, args.accept, args.seed, args.distance, args.threads)
    result = fit_pipeline(trace, args.restarts, cfg)
    write_json(args.out, result.to_dict())
    if args.dump_draws:
        write_draws(args.dump_draws, result.accepted_draws)
    return {"trace": args.trace}


def _reliability(args) -> dict:
    params = read_params(args.params)
    queries = read_json(args.queries)
    if isinstance(queries, dict) and "queries" in queries:
        queries = queries["queries"]
    if not isinstance(queries, list):
        raise ValidationError("queries file must hold a list of query objects")
    report = estimate(params, queries, args.reps, args.n_per_rep, args.seed, args.threads).to_dict()
    write_json(args.out, report)
    if args.csv:
        Path(args.csv).write_text(report_csv(report))
    return {"params": args.params, "queries": args.queries}


COMMANDS = {"simulate": _simulate, "moments": _moments, "fit": _fit, "reliability": _reliability}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        inputs = COMMANDS[args.command](args)
        if args.out:
            _write_manifest(args, inputs)
    except ValidationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
