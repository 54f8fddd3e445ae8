"""Command-line entry point: ``opaque-mnl <subcommand> ...``.

Exit status: 0 on success, 1 on invalid input, 2 when a numerical
self-check fires (unimodality guard disagreement, failed verification).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .assortment import all_assortments, revenue_curve, solve
from .experiments import BedConfig, export, generate_bed, run_bench, summary_csv, summary_json
from .model import InstanceError, MarketInstance, NumericalDiagnostic, as_assortment
from .opaque import McConfig, opq_quote_exact, opq_revenue_mc
from .pricing import optimize_prices, sweep_case_i, sweep_monotonicity, sweep_no_opaque_gain

INSTANCE_HELP = """\
instance file (JSON):
  {"v": [number, ...], "r": [number, ...], "name": string (optional)}
  v: intrinsic valuations; r: prices, each in (0, 1e6]; equal lengths.
  Product indices on the command line and in output are 1-based.

output (JSON, one object per run):
  eval    {"assortment": [int], "rho", "revenue", "mode": "exact"|"monte-carlo",
           "half_width", "distribution": {"p_product": {"<i>": p}, "p_opaque", "p_none"},
           "samples", "seed" (monte-carlo only)}
  price   {"assortment", "uniform_price", "opaque_price", "revenue"}
  assort  {"assortment", "opaque_price", "revenue", "opaque_offered", "method",
           "candidates_evaluated", "diagnostic" (only if the guard fired)}
  verify  {"seed", "trials", "max_n", "checks": {name: {"trials", "violations"}}}
  curve and bench write CSV (rho,revenue / per-n summary columns); bench can write JSON.
  JSON Schemas for every document are in docs/schemas/.

environment:
  OPAQUE_MNL_EXACT_CAP      largest assortment evaluated exactly (default 20)
  OPAQUE_MNL_DISABLE_NUMBA  set to 1 to use the pure NumPy kernels
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read_instance(path: str) -> MarketInstance:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InstanceError("instance", f"cannot read {path}: {exc.strerror}") from None
    return MarketInstance.from_json(text)


def _parse_assortment(text: str, n: int):
    try:
        items = [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise InstanceError("assortment", f"expected comma-separated integers, got {text!r}") from None
    return as_assortment(items, n, nonempty=True)


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")


def cmd_eval(args) -> int:
    inst = _read_instance(args.instance)
    S = _parse_assortment(args.assortment, inst.n)
    if args.mode == "exact":
        quote = opq_quote_exact(inst, S, args.rho)
    else:
        if args.samples is None and args.epsilon is None and args.delta is None:
            raise InstanceError("samples", "monte-carlo mode needs --samples or --epsilon/--delta")
        cfg = McConfig(args.samples, args.epsilon, args.delta, args.seed)
        quote = opq_revenue_mc(inst, S, args.rho, cfg)
    _emit({"assortment": list(S), **quote.to_dict()})
    return 0


def cmd_price(args) -> int:
    inst = _read_instance(args.instance)
    _emit(optimize_prices(inst, _parse_assortment(args.assortment, inst.n)).to_dict())
    return 0


def cmd_assort(args) -> int:
    inst = _read_instance(args.instance)
    sol = solve(inst, args.method, tol=args.tol, jobs=args.jobs)
    _emit(sol.to_dict())
    return 2 if sol.diagnostic else 0


def cmd_curve(args) -> int:
    inst = _read_instance(args.instance)
    if args.all_assortments:
        if args.out is None:
            raise InstanceError("out", "--all-assortments needs an output directory")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for S in all_assortments(inst.n):
            name = "curve_" + "-".join(map(str, S)) + ".csv"
            (out / name).write_text(revenue_curve(inst, S, args.points).to_csv())
        return 0
    if args.assortment is None:
        raise InstanceError("assortment", "give --assortment or --all-assortments")
    text = revenue_curve(inst, _parse_assortment(args.assortment, inst.n), args.points).to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    checks = {
        "no_opaque_gain": sweep_no_opaque_gain(args.trials, args.seed, args.max_n),
        "case_i_dominance": sweep_case_i(args.trials, args.seed, args.max_n),
        "price_monotonicity": sweep_monotonicity(args.trials, args.seed, args.max_n),
    }
    report = {
        "seed": args.seed,
        "trials": args.trials,
        "max_n": args.max_n,
        "checks": {k: {"trials": c["trials"], "violations": c["violations"]} for k, c in checks.items()},
    }
    _emit(report)
    return 2 if any(c["violations"] for c in checks.values()) else 0


def cmd_bench(args) -> int:
    cfg = BedConfig(instances=args.instances, max_n=args.max_n, seed=args.seed)
    n_values = args.n or list(range(2, args.max_n + 1))
    summary = run_bench(generate_bed(cfg), n_values, jobs=args.jobs, config=cfg)
    if args.out:
        export(summary, args.out, args.format)
    else:
        sys.stdout.write(summary_csv(summary) if args.format == "csv" else summary_json(summary) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="opaque-mnl",
        description="Price and assortment optimization under MNL with a risk-averse opaque product.",
        epilog=INSTANCE_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_instance(name, help_):
        sp = sub.add_parser(name, help=help_, epilog=INSTANCE_HELP,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("-i", "--instance", required=True, help="instance JSON file, or - for stdin")
        return sp

    sp = with_instance("eval", "revenue and choice probabilities at a given opaque price")
    sp.add_argument("--assortment", required=True, help="comma-separated product indices, e.g. 1,3")
    sp.add_argument("--rho", type=float, required=True, help="opaque price")
    sp.add_argument("--mode", choices=("exact", "mc"), default="exact")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_eval)

    sp = with_instance("price", "optimal traditional and opaque prices for an assortment")
    sp.add_argument("--assortment", required=True)
    sp.set_defaults(func=cmd_price)

    sp = with_instance("assort", "optimize the assortment (opaque price optimized per assortment)")
    sp.add_argument("--method", choices=("brute", "nested", "nrv"), default="nrv")
    sp.add_argument("--tol", type=float, default=1e-6, help="line-search tolerance on rho")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_assort)

    sp = with_instance("curve", "revenue as a function of the opaque price (CSV)")
    sp.add_argument("--assortment")
    sp.add_argument("--all-assortments", action="store_true")
    sp.add_argument("--points", type=int, default=101)
    sp.add_argument("--out", help="output file, or directory with --all-assortments")
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("verify", help="random sweeps of the pricing dominance checks")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-n", type=int, default=6)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="optimal vs NRV over a lognormal instance bed")
    sp.add_argument("--instances", type=int, default=2000)
    sp.add_argument("--max-n", type=int, default=9)
    sp.add_argument("--n", type=int, action="append", help="problem size (repeatable; default 2..max-n)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"opaque-mnl: error: {exc}", file=sys.stderr)
        return 1
    except InstanceError as exc:
        print(f"opaque-mnl: error: {exc}", file=sys.stderr)
        return 1
    except NumericalDiagnostic as exc:
        print(f"opaque-mnl: numerical diagnostic: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
