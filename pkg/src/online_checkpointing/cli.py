"""Command-line interface: ``python -m online_checkpointing <command> ...``."""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from .algorithms import AlgorithmSpec
from .bounds import bounds_for
from .core import CyclicAlgorithm, perf_full, to_json
from .lp import optimize_gamma, optimize_lambda
from .search import exhaustive_search, local_search, optimize_positions_for

JOBS_ENV = "ONLINE_CHECKPOINTING_JOBS"

# best discrepancies reported in the literature, used as a reference column
TABLE1_REFERENCE = {
    3: 1.529, 4: 1.541, 5: 1.472, 6: 1.498, 7: 1.499, 8: 1.499, 9: 1.488,
    10: 1.492, 11: 1.466, 12: 1.457, 13: 1.466, 14: 1.481, 15: 1.484,
}


class UsageError(Exception):
    pass


def fmt(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.6g}"


def parse_budget(text: Optional[str]) -> Optional[float]:
    """Seconds from ``600``, ``600s``, ``10m`` or ``1h``."""
    if text is None:
        return None
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*([smh]?)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad budget {text!r}; use e.g. 600s, 10m, 1h")
    return float(m.group(1)) * {"": 1, "s": 1, "m": 60, "h": 3600}[m.group(2)]


def parse_pattern(text: str) -> tuple[int, ...]:
    try:
        pattern = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"pattern must be comma-separated integers, got {text!r}")
    if not pattern:
        raise argparse.ArgumentTypeError("pattern is empty")
    return pattern


def parse_ks(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        lo, dash, hi = part.partition("-")
        try:
            out.extend(range(int(lo), int(hi) + 1) if dash else [int(lo)])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad k list {text!r}")
    return out


def parse_alg(text: str) -> AlgorithmSpec:
    try:
        return AlgorithmSpec.parse(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def dump(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def without_timing(doc):
    """Drop wall-clock fields so that files are byte-stable across runs."""
    if isinstance(doc, dict):
        return {k: without_timing(v) for k, v in doc.items() if k != "wall_time"}
    if isinstance(doc, list):
        return [without_timing(v) for v in doc]
    return doc


def print_table(rows: Sequence[Sequence[str]], header: Sequence[str]) -> None:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    for r in [header, ["-" * w for w in widths], *rows]:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())


# -- commands -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    spec = AlgorithmSpec(args.alg.name, args.alg.k, args.alg.alpha, args.periods)
    sched = spec.schedule()
    report = perf_full(sched)
    rows = [r for r in report.per_step if r.step > sched.k] or list(report.per_step)
    trace = type(report)(report.k, tuple(rows))
    cyc = spec.cyclic()
    summary = {
        "algorithm": spec.name,
        "k": sched.k,
        "n": cyc.n,
        "gamma": cyc.gamma,
        "periods": args.periods,
        "perf": report.sup,
        "argmax_step": report.argmax.step,
    }
    if args.out or not args.json:
        write_text(args.out, trace.to_csv())
    if args.summary:
        write_text(args.summary, dump(summary))
    if args.json:
        sys.stdout.write(dump(summary))
    else:
        print(f"{spec.name} k={sched.k} n={cyc.n} gamma={fmt(cyc.gamma)} "
              f"periods={args.periods} perf={fmt(report.sup)}", file=sys.stderr)
    return 0


def _result_rows(res) -> list[list[str]]:
    return [
        ["k", str(res.k)],
        ["pattern", ",".join(map(str, res.pattern))],
        ["feasible", str(res.feasible)],
        ["gamma", fmt(res.gamma)],
        ["lambda", fmt(res.lam)],
        ["perf (re-measured)", fmt(res.perf)],
        ["solves", str(res.solves)],
        ["gamma evaluations", str(res.gamma_evaluations)],
        ["wall time [s]", fmt(res.wall_time)],
    ]


def cmd_optimize(args) -> int:
    if any(p < 1 or p > args.k for p in args.pattern):
        raise UsageError(f"pattern entries must lie in [1, {args.k}]")
    if args.gamma is not None:
        res = optimize_lambda(args.k, args.pattern, args.gamma, args.lambda_eps, backend=args.backend)
    else:
        res = optimize_gamma(args.k, args.pattern, args.gamma_step, args.lambda_eps,
                             gamma_min=args.gamma_min, gamma_max=args.gamma_max,
                             backend=args.backend)
    doc = res.to_dict()
    if res.feasible:
        doc["algorithm"] = json.loads(to_json(res.algorithm()))
    if args.out:
        write_text(args.out, dump(without_timing(doc)))
    if args.json:
        sys.stdout.write(dump(doc))
    else:
        print_table(_result_rows(res), ["field", "value"])
    return 0 if res.feasible else 3


def cmd_search(args) -> int:
    if args.k < 2:
        raise UsageError("search needs k >= 2")
    if args.mode == "exhaustive":
        rep = exhaustive_search(args.k, args.n_max, args.gamma_step, args.lambda_eps,
                                budget=args.budget, backend=args.backend)
    else:
        rep = local_search(args.k, args.n or args.n_max or args.k, args.iterations, args.seed,
                           args.gamma_step, args.lambda_eps, budget=args.budget,
                           backend=args.backend)
    doc = rep.to_dict()
    if args.out:
        write_text(args.out, dump(without_timing(doc)))
    if args.json:
        sys.stdout.write(dump(doc))
    else:
        rows = [[str(n), fmt(r.lam), fmt(r.gamma), ",".join(map(str, r.pattern))]
                for n, r in sorted(rep.best_by_n.items())]
        print_table(rows, ["n", "lambda", "gamma", "pattern"])
        b = rep.best
        print(f"best: {fmt(rep.lam)}"
              + ("" if b is None else f" pattern={','.join(map(str, b.pattern))} gamma={fmt(b.gamma)}"))
        print(f"evaluated={rep.evaluated} complete={rep.complete} time={fmt(rep.wall_time)}s")
    return 0 if rep.best is not None else 3


def cmd_bounds(args) -> int:
    b = bounds_for(args.k)
    if args.json:
        sys.stdout.write(dump(b.to_dict()))
    else:
        print_table([[name, fmt(v), note] for name, v, note in b.rows()], ["bound", "value", "note"])
    return 0


def cmd_compare(args) -> int:
    alg: CyclicAlgorithm = args.alg.cyclic()
    cmp = optimize_positions_for(alg, args.gamma_step, args.lambda_eps, backend=args.backend)
    doc = cmp.to_dict()
    if args.out:
        write_text(args.out, dump(without_timing(doc)))
    if args.json:
        sys.stdout.write(dump(doc))
    else:
        print_table(
            [[cmp.algorithm, str(cmp.k), fmt(cmp.perf), fmt(cmp.optimized.lam),
              fmt(cmp.optimized.gamma), f"{100 * cmp.improvement:.4g}%"]],
            ["algorithm", "k", "perf", "optimized", "gamma", "improvement"],
        )
    return 0


def table1_plan(k: int) -> tuple[str, int]:
    """(method, pattern length) used for a Table-1 cell."""
    if k <= 7:
        return "exhaustive", k
    if k == 8:
        return "exhaustive", 7
    return "local", k


def table1_cell(k: int, budget, seed: int, iterations: int, gamma_step: float, eps: float) -> dict:
    method, n = table1_plan(k)
    t0 = time.perf_counter()
    if method == "exhaustive":
        rep = exhaustive_search(k, n, gamma_step, eps, budget=budget)
    else:
        rep = local_search(k, n, iterations, seed, gamma_step, eps, budget=budget)
    b = rep.best
    return {
        "k": k,
        "method": method,
        "n_max": n,
        "lambda": rep.lam,
        "reference": TABLE1_REFERENCE.get(k),
        "pattern": None if b is None else list(b.pattern),
        "gamma": None if b is None else b.gamma,
        "evaluated": rep.evaluated,
        "partial": not rep.complete,
        "runtime": time.perf_counter() - t0,
    }


def cmd_table1(args) -> int:
    ks = args.ks
    if any(k < 2 for k in ks):
        raise UsageError("table1 needs every k >= 2")
    job = (args.budget, args.seed, args.iterations, args.gamma_step, args.lambda_eps)
    if args.jobs > 1 and len(ks) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            cells = list(pool.map(table1_cell, ks, *[[x] * len(ks) for x in job]))
    else:
        cells = [table1_cell(k, *job) for k in ks]
    if args.format == "json":
        text = dump(cells)
    elif args.format == "csv":
        lines = ["k,method,n_max,lambda,reference,pattern,gamma,evaluated,partial,runtime"]
        for c in cells:
            lines.append(",".join([
                str(c["k"]), c["method"], str(c["n_max"]), repr(c["lambda"]),
                "" if c["reference"] is None else repr(c["reference"]),
                "" if c["pattern"] is None else " ".join(map(str, c["pattern"])),
                repr(c["gamma"]), str(c["evaluated"]), str(c["partial"]).lower(),
                f"{c['runtime']:.6g}",
            ]))
        text = "\n".join(lines) + "\n"
    else:
        lines = ["| k | method | lambda | reference | pattern | gamma | runtime [s] | partial |",
                 "|---|---|---|---|---|---|---|---|"]
        for c in cells:
            pat = "-" if c["pattern"] is None else ",".join(map(str, c["pattern"]))
            lines.append(f"| {c['k']} | {c['method']} (n<={c['n_max']}) | {fmt(c['lambda'])} | "
                         f"{fmt(c['reference'])} | {pat} | {fmt(c['gamma'])} | "
                         f"{c['runtime']:.3g} | {'yes' if c['partial'] else 'no'} |")
        text = "\n".join(lines) + "\n"
    write_text(args.out, text)
    return 0


# -- parser -------------------------------------------------------------------

def _add_lp_flags(p: argparse.ArgumentParser, gamma_step: Optional[float] = 1e-3) -> None:
    p.add_argument("--gamma-step", type=float, default=gamma_step,
                   help="gamma grid spacing (default %(default)s)")
    p.add_argument("--lambda-eps", type=float, default=1e-6,
                   help="bisection tolerance on lambda (default %(default)s)")
    p.add_argument("--backend", choices=("auto", "simplex", "highs"), default="auto",
                   help="LP solver (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="online-checkpointing",
        description="Simulate and optimize online checkpointing algorithms under max-distance discrepancy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an algorithm and write a discrepancy trace")
    p.add_argument("--alg", type=parse_alg, required=True,
                   help="simple | linear:k=K[,alpha=A] | binary:k=K | doubling:k=K")
    p.add_argument("--periods", type=int, default=1, help="number of periods (default 1)")
    p.add_argument("--out", help="CSV trace file (default: trace to stdout)")
    p.add_argument("--summary", help="JSON summary file")
    p.add_argument("--json", action="store_true", help="print the JSON summary on stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="best positions and gamma for a fixed removal pattern")
    p.add_argument("--k", type=positive_int, required=True)
    p.add_argument("--pattern", type=parse_pattern, required=True, help="e.g. 1,3,1")
    p.add_argument("--gamma", type=float, help="fix gamma instead of scanning")
    p.add_argument("--gamma-min", type=float, default=1.0)
    p.add_argument("--gamma-max", type=float)
    _add_lp_flags(p)
    p.add_argument("--out", help="result JSON file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("search", help="search removal patterns for a given k")
    p.add_argument("--k", type=positive_int, required=True)
    p.add_argument("--mode", choices=("exhaustive", "local"), default="exhaustive")
    p.add_argument("--n-max", type=positive_int, help="longest pattern (exhaustive; default k)")
    p.add_argument("--n", type=positive_int, help="pattern length (local; default n-max or k)")
    p.add_argument("--iterations", type=positive_int, default=500)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--budget", type=parse_budget, help="wall-clock limit, e.g. 600s")
    _add_lp_flags(p)
    p.add_argument("--out", help="report JSON file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("bounds", help="closed-form reference bounds")
    p.add_argument("--k", type=positive_int, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("compare", help="re-optimize an algorithm's positions for its own pattern")
    p.add_argument("--alg", type=parse_alg, required=True)
    _add_lp_flags(p, gamma_step=None)
    p.add_argument("--out", help="report JSON file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("table1", help="best discrepancy found for a list of k")
    p.add_argument("--ks", type=parse_ks, default=parse_ks("3-5"), help="e.g. 3,4,5 or 3-7")
    p.add_argument("--budget", type=parse_budget, help="wall-clock limit per k")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--iterations", type=positive_int, default=500,
                   help="local search iterations for k > 8")
    _add_lp_flags(p)
    p.add_argument("--jobs", type=positive_int, default=int(os.environ.get(JOBS_ENV, "1")),
                   help=f"worker processes (default ${JOBS_ENV} or 1)")
    p.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_table1)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, AssertionError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
