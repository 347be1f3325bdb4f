"""Command line entry point: solve, sweep, partition and report."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .demand import write_partition_csv
from .errors import ConfigurationError
from .experiment import demand_sweep, gamma_sweep, initial_partition, run_single, with_seed
from .report import emit_report, summarize
from .scenario import load_scenario


def _load(args):
    cfg = load_scenario(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = with_seed(cfg, args.seed)
    if getattr(args, "users", None) is not None:
        cfg = replace(cfg, users=args.users)
    return cfg


def _solve(args) -> int:
    cfg = _load(args)
    r = run_single(cfg, args.gamma, args.users)
    emit_report([r], args.out)
    print(f"{r.scenario}: N0={r.initial.cost:.4f} N*={r.best.cost:.4f} "
          f"N_RS={r.best.n_rs} buses={r.best.total_vehicles} -> {args.out}")
    return 0


def _sweep(args) -> int:
    cfg = _load(args)
    results = gamma_sweep(cfg) if args.kind == "gamma" else demand_sweep(cfg)
    emit_report(results, args.out)
    print(summarize(args.out))
    return 0


def _partition(args) -> int:
    cfg = _load(args)
    pd = initial_partition(cfg, args.gamma, args.users)
    write_partition_csv(pd, args.out if args.out else sys.stdout)
    return 0


def _report(args) -> int:
    print(summarize(args.indir))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="transit-mod",
                                 description="Joint PT layout and ride-sharing fleet optimization.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimize one gamma / demand case")
    p.add_argument("--config", required=True, help="scenario JSON file or bundled name (desk3, paris7)")
    p.add_argument("--gamma", type=float)
    p.add_argument("--users", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="out")
    p.set_defaults(func=_solve)

    p = sub.add_parser("sweep", help="warm-started gamma sweep or demand sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--kind", choices=("gamma", "demand"), required=True)
    p.add_argument("--users", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="out")
    p.set_defaults(func=_sweep)

    p = sub.add_parser("partition", help="mode classes under the initial layout, as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--users", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=_partition)

    p = sub.add_parser("report", help="print the cost table of a report directory")
    p.add_argument("--in", dest="indir", required=True)
    p.set_defaults(func=_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        for problem in exc.problems or [str(exc)]:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
