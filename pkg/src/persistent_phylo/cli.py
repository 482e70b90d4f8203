"""Command-line entry point.

Exit codes: 0 reducible / success, 1 not reducible or disagreement,
2 bad input, 3 oracle budget exhausted. Payloads go to stdout and
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Tuple

from . import oracle
from .matrix import BinaryMatrix, MatrixParseError, parse_matrix
from .recognizer import NotMaximalError, explain, find_reduction
from .tree import build_tree, export_dot, export_json

EXIT_OK, EXIT_NO, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("persistent_phylo")


class InputError(Exception):
    pass


def _range(text: str) -> Tuple[int, int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo_i, hi_i = int(lo), int(hi)
        else:
            lo_i = hi_i = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if lo_i < 1 or hi_i < lo_i:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return lo_i, hi_i


def _floats(text: str) -> List[float]:
    try:
        values = [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(not 0 < v < 1 for v in values):
        raise argparse.ArgumentTypeError("densities must lie strictly between 0 and 1")
    return values


def _ints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _read_input(path: str) -> BinaryMatrix:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_matrix(text)
    except MatrixParseError as exc:
        raise InputError(str(exc)) from None


def _recognize(path: str):
    matrix = _read_input(path)
    try:
        return matrix, find_reduction(matrix)
    except NotMaximalError as exc:
        raise InputError(str(exc)) from None


# ---- commands ---------------------------------------------------------------------


def cmd_check(args) -> int:
    _, outcome = _recognize(args.input)
    if args.format == "json":
        print(json.dumps(outcome.to_dict(), indent=2))
    else:
        sys.stdout.write(explain(outcome))
    if not outcome.reducible:
        print(f"not reducible: {outcome.refutation.describe()}", file=sys.stderr)
    return EXIT_OK if outcome.reducible else EXIT_NO


def cmd_reduce(args) -> int:
    _, outcome = _recognize(args.input)
    if not outcome.reducible:
        print(f"not reducible: {outcome.refutation.describe()}", file=sys.stderr)
        return EXIT_NO
    if args.format == "json":
        print(json.dumps(outcome.reduction.to_dict(), indent=2))
    else:
        print(",".join(outcome.reduction.ordering))
    return EXIT_OK


def cmd_tree(args) -> int:
    matrix, outcome = _recognize(args.input)
    if not outcome.reducible:
        print(f"not reducible: {outcome.refutation.describe()}", file=sys.stderr)
        return EXIT_NO
    tree = build_tree(matrix, outcome.reduction)
    sys.stdout.write(export_dot(tree) if args.format == "dot" else export_json(tree) + "\n")
    return EXIT_OK


def _families(args) -> List[oracle.InstanceFamily]:
    if args.mode == "exhaustive":
        return [oracle.InstanceFamily(args.n_range, args.m_range, "exhaustive", seed=args.seed)]
    return [
        oracle.InstanceFamily(args.n_range, args.m_range, "random", seed=args.seed + i,
                              density=d, count=args.count)
        for i, d in enumerate(args.densities)
    ]


def cmd_oracle(args) -> int:
    try:
        families = _families(args)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    instances = (mx for fam in families for mx in oracle.enumerate_instances(fam))
    report = oracle.agreement_check(instances, budget=args.budget, workers=args.workers)
    sys.stdout.write(report.to_jsonl())
    s = report.summary()
    print(f"{s['total']} instances, {s['agree']} agree, {s['disagreements']} disagree, "
          f"{s['inconclusive']} inconclusive", file=sys.stderr)
    if report.disagreements:
        return EXIT_NO
    return EXIT_BUDGET if report.inconclusive else EXIT_OK


def cmd_gen(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.reducible:
        n, m = args.reducible
        matrices = [oracle.generate_reducible(n, m, seed=args.seed + i) for i in range(args.count)]
    else:
        try:
            families = _families(args)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        matrices = [mx for fam in families for mx in oracle.enumerate_instances(fam)]
    width = max(4, len(str(len(matrices))))
    for i, mx in enumerate(matrices):
        (out / f"instance_{i:0{width}d}.csv").write_text(mx.to_csv())
    print(f"wrote {len(matrices)} matrices to {out}", file=sys.stderr)
    return EXIT_OK


def _bench_one(job) -> Tuple[int, int, float, str]:
    n, m, seed, repeats = job
    matrix = oracle.generate_reducible(n, m, seed=seed)
    best = float("inf")
    verdict = ""
    for _ in range(repeats):
        t0 = time.perf_counter()
        verdict = find_reduction(matrix).verdict
        best = min(best, time.perf_counter() - t0)
    return n, m, best, verdict


def cmd_bench(args) -> int:
    jobs = [(n, max(1, n // 2), args.seed + n, args.repeats) for n in args.sizes]
    if args.workers > 1:
        # timing under contention would be meaningless; the pool only shortens wall time
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_bench_one, jobs))
    else:
        rows = [_bench_one(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "seconds", "verdict"])
    for n, m, sec, verdict in rows:
        w.writerow([n, m, f"{sec:.6f}", verdict])
    sys.stdout.write(buf.getvalue())
    return EXIT_OK if all(r[3] == "reducible" for r in rows) else EXIT_NO


# ---- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppp", description="Persistent perfect phylogeny toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p, formats, default):
        p.add_argument("--input", "-i", default="-", help="CSV matrix path, or - for stdin (default)")
        p.add_argument("--format", "-f", choices=formats, default=default)

    add_input(sub.add_parser("check", help="decide reducibility and show the iteration trace"),
              ["table", "json"], "table")
    add_input(sub.add_parser("reduce", help="print a reduction ordering"), ["table", "json"], "table")
    add_input(sub.add_parser("tree", help="build the phylogeny of a reducible matrix"), ["json", "dot"], "json")

    def add_family(p):
        p.add_argument("--mode", choices=["exhaustive", "random"], default="exhaustive")
        p.add_argument("--n-range", type=_range, default=(2, 5), metavar="A..B")
        p.add_argument("--m-range", type=_range, default=(2, 4), metavar="A..B")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--count", type=int, default=1000, help="instances per density (random mode)")
        p.add_argument("--densities", type=_floats, default=[0.5], metavar="LIST")

    p = sub.add_parser("oracle", help="compare the recognizer against exhaustive search")
    add_family(p)
    p.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("gen", help="write instance matrices as CSV files")
    add_family(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--reducible", type=int, nargs=2, metavar=("N", "M"),
                   help="generate reducible N x M instances instead of a family")

    p = sub.add_parser("bench", help="time the recognizer on generated reducible instances")
    p.add_argument("--sizes", type=_ints, default=[50, 100, 200, 400], metavar="LIST")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    return parser


COMMANDS = {
    "check": cmd_check, "reduce": cmd_reduce, "tree": cmd_tree,
    "oracle": cmd_oracle, "gen": cmd_gen, "bench": cmd_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
