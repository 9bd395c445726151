"""Command line entry point: ``dualmeb {solve,gen,bench,bench-kernels}``.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 iteration cap.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import __version__, _backend
from .harness import (
    DISTRIBUTIONS,
    InstanceSpec,
    PointFileError,
    bench_kernels,
    format_points,
    format_table,
    generate,
    load_points,
    run_bench,
    write_csv,
)
from .solver import VARIANTS, VIOLATOR_RULES, NonTerminationError, SolverConfig, SolverError, solve

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_ITERATION_CAP = 0, 1, 2, 3

#: JSON Schema of ``solve --json`` output.
SOLVE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["radius", "center", "support_indices", "iterations", "time_seconds", "variant"],
    "additionalProperties": False,
    "properties": {
        "radius": {"type": "number", "minimum": 0},
        "center": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "support_indices": {
            "type": "array",
            "items": {"type": "integer", "minimum": 0},
            "minItems": 1,
            "uniqueItems": True,
        },
        "iterations": {"type": "integer", "minimum": 0},
        "time_seconds": {"type": "number", "minimum": 0},
        "variant": {"enum": list(VARIANTS)},
    },
}


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _int_list(s):
    try:
        vals = [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {s!r}")
    return vals


def _variant_list(s):
    vals = [t.strip() for t in s.split(",") if t.strip()]
    bad = [v for v in vals if v not in VARIANTS]
    if bad or not vals:
        raise argparse.ArgumentTypeError(f"variants must come from {VARIANTS}, got {s!r}")
    return vals


def _m_rule(s):
    """``--m`` accepts a count (``1000``) or a multiple of n (``2n``)."""
    s = s.strip()
    try:
        if s.endswith("n"):
            factor = int(s[:-1] or 1)
            if factor < 1:
                raise ValueError
            return lambda n: factor * n
        m = int(s)
        if m < 2:
            raise ValueError
        return lambda n: m
    except ValueError:
        raise argparse.ArgumentTypeError(f"--m must be an integer >= 2 or of the form '<k>n', got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualmeb", description="Minimum covering ball by dual pivoting.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one point file")
    s.add_argument("--input", required=True, help="point file ('m n' header, then m rows)")
    s.add_argument("--variant", choices=VARIANTS, default="projection")
    s.add_argument("--tol", type=float, default=1e-9, help="relative coverage tolerance")
    s.add_argument("--violator", choices=VIOLATOR_RULES, default="farthest")
    s.add_argument("--max-iter", type=_positive_int, default=None, help="outer iteration cap")
    s.add_argument("--json", action="store_true", help="print the result as JSON")

    g = sub.add_parser("gen", help="write a seeded random instance")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--distribution", choices=DISTRIBUTIONS, default=DISTRIBUTIONS[0])
    g.add_argument("--out", default="-", help="output path, '-' for stdout")

    b = sub.add_parser("bench", help="time both facet searches over a size sweep")
    b.add_argument("--n-list", type=_int_list, required=True, help="comma-separated dimensions")
    b.add_argument("--m", type=_m_rule, default=_m_rule("2n"), help="point count or '<k>n' (default 2n)")
    b.add_argument("--reps", type=_positive_int, default=3)
    b.add_argument("--variants", type=_variant_list, default=list(VARIANTS))
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=_positive_int, default=1)
    b.add_argument("--csv", default=None, help="write rows and slopes here")

    k = sub.add_parser("bench-kernels", help="compare compiled and pure-Python QR kernels")
    k.add_argument("--sizes", type=_int_list, default=[50, 200, 800])
    k.add_argument("--reps", type=_positive_int, default=5)
    return p


def _cmd_solve(args, out) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        # keep file rows as-is so support indices refer to input lines
        pts = load_points(args.input, deduplicate=False)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    cfg = SolverConfig(variant=args.variant, coverage_tol=args.tol, violator_rule=args.violator,
                       max_iterations=args.max_iter)
    ball, support, report = solve(pts, cfg)
    result = {
        "radius": ball.radius,
        "center": [float(c) for c in ball.center],
        "support_indices": sorted(support.indices),
        "iterations": report.iterations,
        "time_seconds": report.time_seconds,
        "variant": args.variant,
    }
    if args.json:
        out.write(json.dumps(result) + "\n")
    else:
        out.write(f"radius      {ball.radius:.17g}\n")
        out.write(f"support     {result['support_indices']}\n")
        out.write(f"iterations  {report.iterations}\n")
        out.write(f"time        {report.time_seconds:.4f} s ({args.variant})\n")
    return EXIT_OK


def _cmd_gen(args, out) -> int:
    text = format_points(generate(InstanceSpec(args.n, args.m, args.distribution, args.seed)))
    if args.out == "-":
        out.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return EXIT_OK


def _cmd_bench(args, out) -> int:
    sizes = [(n, args.m(n)) for n in args.n_list]
    res = run_bench(sizes, args.variants, args.reps, base_seed=args.seed, workers=args.workers)
    out.write(format_table(res) + "\n")
    if args.csv:
        write_csv(res, args.csv)
    for r in res.rows:
        if r.failures:
            print(f"warning: n={r.n} m={r.m} {r.variant}: {r.failures} failed ({r.error})", file=sys.stderr)
    return EXIT_OK


def _cmd_bench_kernels(args, out) -> int:
    rows = bench_kernels(args.sizes, args.reps)
    by = {(r["op"], r["n"], r["backend"]): r["seconds"] for r in rows}
    out.write(f"{'op':<16} {'n':>5} " + " ".join(f"{b:>12}" for b in _backend.available()) + "   speedup\n")
    for op, n in dict.fromkeys((r["op"], r["n"]) for r in rows):
        times = [by[(op, n, b)] for b in _backend.available()]
        ratio = f"{times[1] / times[0]:8.1f}x" if len(times) == 2 else "       -"
        out.write(f"{op:<16} {n:>5} " + " ".join(f"{t * 1e3:10.3f}ms" for t in times) + f"   {ratio}\n")
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "gen": _cmd_gen, "bench": _cmd_bench, "bench-kernels": _cmd_bench_kernels}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse: usage errors are input errors
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return _COMMANDS[args.command](args, out)
    except NonTerminationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ITERATION_CAP
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PointFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
