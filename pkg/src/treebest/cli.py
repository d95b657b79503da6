"""Command line front end: ``treebest <command> ...``.

Exit status is 0 when solutions were produced (Solved or Exhausted), 2 on
NoValidSolution or Infeasible, 1 on bad input or usage.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import oracle
from .baseline import divmbest_next
from .bench import METHODS, run_benchmark, summarize, write_records, write_summary
from .diverse import diverse_m_accumulate, diverse_next_accumulate, diverse_next_klayer, parse_diversity
from .dpcore import map_solve
from .generate import RandomTreeConfig
from .layered import Mode, m_best_sequential
from .model import InvalidModelError, Labeling, ParseError, TreeModel, load_model
from .report import SolverReport, Status

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_SOLUTION = 2


class UsageError(Exception):
    pass


def format_energy(value: float) -> str:
    return f"{value:.12g}"


def format_line(sol: Labeling, hamming: Optional[int]) -> str:
    h = "-" if hamming is None else str(hamming)
    return f"energy={format_energy(sol.energy)} hamming={h} x={','.join(map(str, sol.assignment))}"


def emit(report: SolverReport, as_json: bool, out=None) -> int:
    out = out or sys.stdout
    hammings = list(report.hammings) + [None] * (len(report.solutions) - len(report.hammings))
    for sol, h in zip(report.solutions, hammings):
        if as_json:
            obj = {
                "energy": sol.energy,
                "hamming": h,
                "assignment": list(sol.assignment),
                "status": str(report.status),
                "method": report.method,
            }
            print(json.dumps(obj), file=out)
        else:
            print(format_line(sol, h), file=out)
    if report.status in (Status.SOLVED, Status.EXHAUSTED):
        if report.status is Status.EXHAUSTED:
            print(f"{report.method}: exhausted after {len(report.solutions)} solution(s)", file=sys.stderr)
        return EXIT_OK
    print(f"{report.method}: {report.status}", file=sys.stderr)
    return EXIT_NO_SOLUTION


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("k values must be >= 1")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treebest", description="MAP, M-best and diverse solutions of tree models.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_model(p):
        p.add_argument("model", type=Path, help="TREEMODEL file")
        p.add_argument("--json", action="store_true", help="one JSON object per solution")
        return p

    with_model(sub.add_parser("solve", help="minimum energy assignment"))

    p = with_model(sub.add_parser("mbest", help="M lowest-energy assignments"))
    p.add_argument("--m", type=_positive, required=True)
    p.add_argument("--exact", action="store_true", help="search layer orderings (default: naive order)")

    p = with_model(sub.add_parser("diverse", help="solutions at Hamming distance >= k"))
    p.add_argument("--method", choices=("klayer", "accumulate", "divmbest"), required=True)
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--m", type=_positive, default=2, help="total solutions including the MAP (default 2)")
    p.add_argument("--iters", type=_positive, default=100, help="divmbest iterations")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--diversity", choices=("hamming",), default="hamming")
    group.add_argument("--diversity-file", type=Path, help="custom weights for accumulate")

    p = with_model(sub.add_parser("oracle", help="brute-force reference answers"))
    p.add_argument("--m", type=_positive, help="M best assignments")
    p.add_argument("--k", type=_positive, help="best assignment at distance >= k from the MAP")

    p = sub.add_parser("bench", help="random-tree comparison, CSV output")
    p.add_argument("--trees", type=int, default=50)
    p.add_argument("--nodes", type=_positive, default=100)
    p.add_argument("--labels", type=_positive, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-list", type=_int_list, default=list(range(1, 10)))
    p.add_argument("--methods", default=",".join(METHODS), help=f"comma separated subset of {','.join(METHODS)}")
    p.add_argument("--repeats", type=_positive, default=3, help="timed runs per record, fastest kept")
    p.add_argument("--out", type=Path, required=True, help="record CSV ('-' for stdout)")
    p.add_argument("--summary", type=Path, help="summary CSV")
    return parser


def _diverse(model: TreeModel, args) -> SolverReport:
    if args.diversity_file is not None and args.method != "accumulate":
        raise UsageError("--diversity-file only applies to --method accumulate")
    first = map_solve(model)
    if not first.solved:
        return first
    best = first.best
    if args.method == "accumulate" and args.diversity_file is None:
        return diverse_m_accumulate(model, args.m, args.k)
    if args.m > 2:
        raise UsageError("--m > 2 is only supported by --method accumulate with Hamming diversity")
    if args.m == 1:
        first.method = args.method
        return first
    if args.method == "klayer":
        nxt = diverse_next_klayer(model, best, args.k)
    elif args.method == "divmbest":
        nxt = divmbest_next(model, [best], args.k, max_iterations=args.iters)
    else:
        spec = parse_diversity(args.diversity_file.read_text(), model)
        nxt = diverse_next_accumulate(model, spec, previous=best)
    nxt.solutions = [best] + nxt.solutions
    nxt.hammings = [None] + nxt.hammings
    return nxt


def _oracle(model: TreeModel, args) -> SolverReport:
    if (args.m is None) == (args.k is None):
        raise UsageError("oracle needs exactly one of --m or --k")
    if args.m is not None:
        sols = oracle.enumerate_best(model, args.m)
        hammings = [None] + [min(oracle.hamming(s, t) for t in sols[:i]) for i, s in enumerate(sols) if i]
        status = Status.SOLVED if len(sols) == args.m else Status.EXHAUSTED
        return SolverReport(status, "oracle", sols, hammings)
    best = oracle.enumerate_best(model, 1)
    found = oracle.best_with_min_distance(model, best, args.k)
    if found is None:
        return SolverReport(Status.NO_VALID, "oracle", best, [None])
    return SolverReport(Status.SOLVED, "oracle", best + [found], [None, oracle.hamming(found, best[0])])


def _bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = sorted(set(methods) - set(METHODS))
    if unknown or not methods:
        raise UsageError(f"unknown methods: {','.join(unknown) or '(none)'}")
    try:
        config = RandomTreeConfig(node_count=args.nodes, label_count=args.labels, seed=args.seed, tree_count=args.trees)
    except ValueError as exc:
        raise UsageError(str(exc))
    records = run_benchmark(config, methods, args.k_list, repeats=args.repeats)
    if str(args.out) == "-":
        write_records(records, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_records(records, fh)
    if args.summary is not None:
        with open(args.summary, "w", newline="") as fh:
            write_summary(summarize(records), fh)
    return EXIT_OK


def run(args) -> int:
    if args.command == "bench":
        return _bench(args)
    model = load_model(args.model)
    if args.command == "solve":
        report = map_solve(model)
    elif args.command == "mbest":
        report = m_best_sequential(model, args.m, Mode.PERMUTATION_EXACT if args.exact else Mode.NAIVE)
    elif args.command == "diverse":
        report = _diverse(model, args)
    else:
        report = _oracle(model, args)
    return emit(report, args.json)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return run(args)
    except ParseError as exc:
        print(f"treebest: parse error: {exc}", file=sys.stderr)
    except (InvalidModelError, UsageError, ValueError, OSError) as exc:
        print(f"treebest: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
