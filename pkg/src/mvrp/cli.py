"""Command-line front end.

Exit codes: 0 success, 1 parse/read error, 2 infeasible or invariant
violation, 3 validation violations.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from .bench import ABLATIONS, ratio_summary, rows_to_csv, run_bench
from .errors import (
    BadEta,
    InfeasibleInstance,
    InfeasibleSparse,
    InstanceTooLarge,
    InvariantViolation,
    MvrpError,
    ParseError,
    UnknownCustomer,
)
from .instance import Instance, Metric, derive_instance, parse_cvrp, parse_instance, serialize_instance
from .milp import build_milp
from .oracle import brute_force_opt
from .search import SearchParams, multi_start
from .solution import solution_from_json
from .validate import validate

PARSE_EXIT = 1
INFEASIBLE_EXIT = 2
INVALID_EXIT = 3


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _load_instance(path: str) -> Instance:
    return parse_instance(_read(path))


def _search_params(args, defaults: SearchParams | None = None) -> SearchParams:
    base = defaults or SearchParams()
    return SearchParams(
        starts=args.starts if args.starts is not None else base.starts,
        max_iterations=args.iterations if args.iterations is not None else base.max_iterations,
        no_improve_shake_trigger=args.shake_trigger
        if args.shake_trigger is not None
        else base.no_improve_shake_trigger,
        tenure=args.tenure if args.tenure is not None else base.tenure,
        sparse_fill_ratio=args.fill_ratio if args.fill_ratio is not None else base.sparse_fill_ratio,
        rng_seed=args.seed,
    )


def _add_search_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0, help="base RNG seed")
    sub.add_argument("--starts", type=int, default=None, help="independent starts")
    sub.add_argument("--iterations", type=int, default=None, help="iterations per start")
    sub.add_argument("--shake-trigger", type=int, default=None, help="non-improving iterations before shaking")
    sub.add_argument("--tenure", type=int, default=None, help="tabu tenure in iterations")
    sub.add_argument("--fill-ratio", type=float, default=None, help="sparse start fill ratio in (0,1]")


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    params = _search_params(args)
    started = time.monotonic()
    best, traces = multi_start(inst, params)
    elapsed = time.monotonic() - started
    report = validate(best, inst)
    if not report.ok:
        print(f"internal error: solution failed validation\n{report}", file=sys.stderr)
        return INVALID_EXIT
    out = Path(args.out) if args.out else Path(args.instance).with_suffix(".sol.json")
    out.write_text(best.to_json(inst))
    trace_dir = Path(args.trace_dir) if args.trace_dir else out.with_suffix(".traces")
    trace_dir.mkdir(parents=True, exist_ok=True)
    for trace in traces:
        (trace_dir / f"start_{trace.start_index}.csv").write_text(trace.to_csv())
    print(f"objective {best.cost(inst)}")
    print(f"time {elapsed:.2f}s")
    print(f"solution {out}")
    return 0


def cmd_validate(args) -> int:
    inst = _load_instance(args.instance)
    sol, arcs, cost, name = solution_from_json(_read(args.solution), inst)
    report = validate(sol, inst, declared_arcs=arcs, declared_cost=cost)
    if name and name != inst.name:
        report.add("GanttMismatch", f"solution names instance {name!r}, not {inst.name!r}")
    if report.ok:
        print("ok")
        return 0
    print(report, file=sys.stderr)
    return INVALID_EXIT


def cmd_derive(args) -> int:
    base = parse_cvrp(_read(args.cvrp))
    rng = random.Random(args.seed)
    keep_count = args.keep_random if args.keep_random is not None else base.n_customers
    if not 1 <= keep_count <= base.n_customers:
        raise InvariantViolation(
            f"cannot keep {keep_count} of {base.n_customers} customers"
        )
    keep = sorted(rng.sample(list(base.customers), keep_count))
    derived = derive_instance(
        base,
        keep,
        capacity=args.capacity,
        max_platoon=args.max_platoon,
        eta=Fraction(args.eta),
        fleet_size=args.fleet,
        metric=Metric.MANHATTAN if args.metric == "manhattan" else Metric.EUC_2D,
        name=args.name or f"{base.name}-{keep_count + 1}",
    )
    text = serialize_instance(derived)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out} ({derived.n_customers} customers)")
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench(args) -> int:
    directory = Path(args.directory)
    paths = sorted(directory.glob("*.mvrp"))
    if not paths:
        print(f"no .mvrp files in {directory}", file=sys.stderr)
        return PARSE_EXIT
    params = _search_params(args)
    l_sweep = [int(x) for x in args.l_sweep.split(",")] if args.l_sweep else None
    ablate = args.ablate.split(",") if args.ablate else None
    if ablate:
        for name in ablate:
            if name not in ABLATIONS:
                print(f"unknown ablation {name!r}; options: {', '.join(ABLATIONS)}", file=sys.stderr)
                return PARSE_EXIT
    rows = run_bench(paths, params, l_sweep, ablate)
    csv_text = rows_to_csv(rows)
    if args.csv:
        Path(args.csv).write_text(csv_text)
        print(f"wrote {args.csv} ({len(rows)} rows)")
    else:
        sys.stdout.write(csv_text)
    if l_sweep and 1 in l_sweep:
        summary = ratio_summary(rows)
        if args.ratios_csv:
            Path(args.ratios_csv).write_text(summary)
            print(f"wrote {args.ratios_csv}")
        elif args.csv:
            target = Path(args.csv).with_suffix(".ratios.csv")
            target.write_text(summary)
            print(f"wrote {target}")
        else:
            sys.stdout.write(summary)
    return 0


def cmd_export_lp(args) -> int:
    inst = _load_instance(args.instance)
    model = build_milp(inst)
    out = Path(args.out) if args.out else Path(args.instance).with_suffix(".lp")
    out.write_text(model.text)
    v = model.variables
    print(f"x:{v['x']} y:{v['y']} u:{v['u']} w:{v['w']} d:{v['d']}")
    print(f"constraints:{model.n_constraints}")
    print(f"wrote {out}")
    return 0


def cmd_brute(args) -> int:
    inst = _load_instance(args.instance)
    started = time.monotonic()
    best, cost = brute_force_opt(inst)
    elapsed = time.monotonic() - started
    if args.out:
        Path(args.out).write_text(best.to_json(inst))
    print(f"objective {cost}")
    print(f"time {elapsed:.2f}s")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvrp",
        description="Modular Vehicle Routing Problem solver toolkit",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("solve", help="run the multi-start tabu search")
    sub.add_argument("instance", help="MVRP instance file")
    sub.add_argument("-o", "--out", default=None, help="solution JSON path")
    sub.add_argument("--trace-dir", default=None, help="directory for per-start trace CSVs")
    _add_search_flags(sub)
    sub.set_defaults(func=cmd_solve)

    sub = subs.add_parser("validate", help="check a solution file against an instance")
    sub.add_argument("instance")
    sub.add_argument("solution")
    sub.set_defaults(func=cmd_validate)

    sub = subs.add_parser("derive", help="derive an MVRP instance from a CVRP file")
    sub.add_argument("cvrp", help="TSPLIB-style CVRP file")
    sub.add_argument("--keep-random", type=int, default=None, help="number of customers to keep")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--capacity", type=int, default=None)
    sub.add_argument("--max-platoon", type=int, default=2)
    sub.add_argument("--eta", default="0.1", help="cost-saving rate, e.g. 0.1")
    sub.add_argument("--fleet", type=int, default=None)
    sub.add_argument("--metric", choices=("manhattan", "euc2d"), default="manhattan")
    sub.add_argument("--name", default=None)
    sub.add_argument("-o", "--out", default=None)
    sub.set_defaults(func=cmd_derive)

    sub = subs.add_parser("bench", help="benchmark a directory of instances")
    sub.add_argument("directory")
    sub.add_argument("--csv", default=None, help="output CSV path")
    sub.add_argument("--ratios-csv", default=None, help="L-sweep ratio summary path")
    sub.add_argument("--l-sweep", default=None, help="comma list of platoon limits, e.g. 1,2,3")
    sub.add_argument("--ablate", default=None, help=f"comma list from: {','.join(ABLATIONS)}")
    _add_search_flags(sub)
    sub.set_defaults(func=cmd_bench)

    sub = subs.add_parser("export-lp", help="write the arc-flow MILP model in LP format")
    sub.add_argument("instance")
    sub.add_argument("-o", "--out", default=None)
    sub.set_defaults(func=cmd_export_lp)

    sub = subs.add_parser("brute", help="exhaustive optimum for a tiny instance")
    sub.add_argument("instance")
    sub.add_argument("-o", "--out", default=None)
    sub.set_defaults(func=cmd_brute)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE_EXIT
    except (
        InfeasibleSparse,
        InfeasibleInstance,
        InstanceTooLarge,
        InvariantViolation,
        UnknownCustomer,
        BadEta,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INFEASIBLE_EXIT
    except MvrpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INFEASIBLE_EXIT


if __name__ == "__main__":
    sys.exit(main())
