"""Compiled vs pure-Python kernels: single QR updates and whole solves.

    python3 benchmarks/compare_backends.py [--n 50,100,200] [--reps 3]
"""
import argparse
import time

import numpy as np

from dualmeb import _backend
from dualmeb.harness import InstanceSpec, bench_kernels, generate
from dualmeb.solver import SolverConfig, solve


def time_solves(n, reps, variant):
    pts = generate(InstanceSpec(n, 2 * n, seed=1))
    out = {}
    for backend in _backend.available():
        with _backend.using(backend):
            best = np.inf
            for _ in range(reps):
                t0 = time.perf_counter()
                ball, _, rep = solve(pts, SolverConfig(variant=variant))
                best = min(best, time.perf_counter() - t0)
            out[backend] = (best, ball.radius, rep.iterations)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="50,100,200")
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()
    sizes = [int(s) for s in args.n.split(",")]
    backends = _backend.available()
    if len(backends) < 2:
        print("compiled kernels are not built; only the python backend is available")

    print("single updates (best of reps, ms)")
    rows = bench_kernels(sizes, args.reps)
    by = {(r["op"], r["n"], r["backend"]): r["seconds"] * 1e3 for r in rows}
    for op, n in dict.fromkeys((r["op"], r["n"]) for r in rows):
        cells = "  ".join(f"{b}={by[(op, n, b)]:8.3f}" for b in backends)
        print(f"  {op:<16} n={n:<5} {cells}")

    print("whole solves, m = 2n (best of reps, s)")
    for variant in ("projection", "scan"):
        for n in sizes:
            res = time_solves(n, args.reps, variant)
            cells = "  ".join(f"{b}={t:8.3f}" for b, (t, _, _) in res.items())
            radii = {round(r, 12) for _, r, _ in res.values()}
            note = "" if len(radii) == 1 else "  (radii differ!)"
            print(f"  {variant:<10} n={n:<5} {cells}{note}")


if __name__ == "__main__":
    main()
