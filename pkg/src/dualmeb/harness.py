"""Point-file I/O, seeded instance generation and timing sweeps.

Point files are plain text: a header line ``m n`` followed by ``m`` rows of
``n`` whitespace-separated floats. Lines starting with ``#`` and blank lines
are ignored. Floats are written with 17 significant digits so a save/load
round trip is exact.
"""
from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import _backend
from . import linalg_qr as qr
from .geometry import PointSet
from .solver import VARIANTS, SolverConfig, SolverError, solve

DISTRIBUTIONS = ("unit_cube_uniform",)


class PointFileError(ValueError):
    """Malformed point file; ``lineno`` is 1-based (0 when not tied to a line)."""

    def __init__(self, message: str, lineno: int = 0, path=None):
        where = f"{path}:{lineno}: " if lineno else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.lineno = lineno
        self.path = path


class DuplicatePointsWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# point files


def _data_lines(text):
    for lineno, line in enumerate(text.split("\n"), start=1):
        s = line.strip()
        if s and not s.startswith("#"):
            yield lineno, s


def parse_points(text: str, *, path=None) -> np.ndarray:
    """Parse point-file text into an ``(m, n)`` array (duplicates kept)."""
    lines = _data_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise PointFileError("empty file, expected an 'm n' header", 0, path) from None
    parts = header.split()
    try:
        if len(parts) != 2:
            raise ValueError
        m, n = int(parts[0]), int(parts[1])
    except ValueError:
        raise PointFileError(f"header must be two integers 'm n', got {header!r}", lineno, path) from None
    if m < 1 or n < 1:
        raise PointFileError(f"header declares m={m}, n={n}; both must be positive", lineno, path)
    coords = np.empty((m, n))
    row = 0
    for lineno, s in lines:
        if row == m:
            raise PointFileError(f"more than the declared {m} rows", lineno, path)
        vals = s.split()
        if len(vals) != n:
            raise PointFileError(f"expected {n} coordinates, found {len(vals)}", lineno, path)
        try:
            coords[row] = [float(v) for v in vals]
        except ValueError as exc:
            raise PointFileError(f"bad number ({exc})", lineno, path) from None
        if not np.all(np.isfinite(coords[row])):
            raise PointFileError("non-finite coordinate", lineno, path)
        row += 1
    if row != m:
        raise PointFileError(f"header declares {m} rows but {row} were found", 0, path)
    return coords


def load_points(path, *, deduplicate: bool = True) -> PointSet:
    """Read a point file.

    Exact duplicate rows trigger a :class:`DuplicatePointsWarning` with their
    count and, unless ``deduplicate=False``, are dropped (first occurrence
    kept). Fewer than two distinct points is an error either way.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PointFileError(f"cannot read file ({exc.strerror})", 0, path) from exc
    ps = PointSet(parse_points(text, path=path))
    uniq, _, _ = ps.deduplicated()
    if uniq.count < 2:
        raise PointFileError(f"need at least 2 distinct points, got {uniq.count}", 0, path)
    dropped = ps.count - uniq.count
    if dropped:
        warnings.warn(f"{path}: {dropped} duplicate point(s)", DuplicatePointsWarning, stacklevel=2)
    return uniq if deduplicate else ps


def format_points(points) -> str:
    coords = points.coords if isinstance(points, PointSet) else np.atleast_2d(np.asarray(points, dtype=np.float64))
    m, n = coords.shape
    out = [f"{m} {n}"]
    out.extend(" ".join(format(float(v), ".17g") for v in row) for row in coords)
    return "\n".join(out) + "\n"


def save_points(points, path) -> None:
    Path(path).write_text(format_points(points), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class InstanceSpec:
    n: int
    m: int
    distribution: str = "unit_cube_uniform"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def generate(spec: InstanceSpec) -> PointSet:
    """Points drawn uniformly from the unit cube with a PCG64 stream seeded by ``spec.seed``."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return PointSet(rng.random((spec.m, spec.n)))


# ---------------------------------------------------------------------------
# timing sweeps


@dataclass
class BenchRow:
    n: int
    m: int
    variant: str
    reps: int
    mean_time_seconds: float
    mean_iterations: float
    mean_time_per_iteration: float
    failures: int = 0
    error: str = ""

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")


@dataclass
class BenchResult:
    rows: list
    slopes: dict  # variant -> fitted log-log slope of time per iteration vs n


def rep_seed(base_seed: int, n: int, m: int, rep: int) -> int:
    """Seed of one benchmark instance; both variants see the same points."""
    return int(np.random.SeedSequence([base_seed, n, m, rep]).generate_state(1)[0])


def _run_one(key):
    n, m, variant, rep, seed, config = key
    pts = generate(InstanceSpec(n, m, seed=seed))
    try:
        _, _, report = solve(pts, SolverConfig(variant=variant, **config))
    except SolverError as exc:
        return key[:4], None, None, f"{type(exc).__name__}: {exc}"
    return key[:4], report.time_seconds, report.iterations, ""


def fit_slope(ns, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ns)``."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values) & (values > 0)
    if np.unique(ns[ok]).size < 2:
        return math.nan
    return float(np.polyfit(np.log(ns[ok]), np.log(values[ok]), 1)[0])


def run_bench(sizes, variants=VARIANTS, reps: int = 3, *, base_seed: int = 0, workers: int = 1,
              config: dict | None = None, progress=None) -> BenchResult:
    """Time both facet searches over a sweep of instance sizes.

    Parameters
    ----------
    sizes : iterable of (n, m)
    variants : iterable of str
    reps : int
        Solves per (n, m, variant), each on its own seeded instance.
    workers : int
        Process count; results are reduced by (n, m, variant, rep) so the
        row order does not depend on scheduling.
    config : dict, optional
        Extra :class:`SolverConfig` fields.
    progress : callable, optional
        Called with each finished ``(n, m, variant, rep, seconds)``.

    Solver failures are counted per row rather than raised. Only solve time
    is measured; instance generation is excluded.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    variants = list(variants)
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {v!r}")
    config = dict(config or {})
    jobs = [(n, m, v, rep, rep_seed(base_seed, n, m, rep), config)
            for n, m in sizes for v in variants for rep in range(reps)]
    results = {}
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            for key, t, it, err in pool.map(_run_one, jobs):
                results[key] = (t, it, err)
    else:
        for job in jobs:
            key, t, it, err = _run_one(job)
            results[key] = (t, it, err)
            if progress is not None:
                progress((*key, t))

    rows = []
    for n, m in sizes:
        for v in variants:
            got = [results[(n, m, v, rep)] for rep in range(reps)]
            ok = [(t, it) for t, it, err in got if not err]
            errors = [err for _, _, err in got if err]
            if ok:
                total_t = sum(t for t, _ in ok)
                total_it = sum(it for _, it in ok)
                row = BenchRow(n, m, v, reps, total_t / len(ok), total_it / len(ok),
                               total_t / max(total_it, 1), len(errors), errors[0] if errors else "")
            else:
                row = BenchRow(n, m, v, reps, math.nan, math.nan, math.nan, len(errors), errors[0])
            rows.append(row)
    slopes = {v: fit_slope([r.n for r in rows if r.variant == v],
                           [r.mean_time_per_iteration for r in rows if r.variant == v]) for v in variants}
    return BenchResult(rows, slopes)


_CSV_FIELDS = [f.name for f in fields(BenchRow)]


def write_csv(result: BenchResult, path) -> None:
    """Rows as CSV, followed by ``# slope,<variant>,<value>`` comment lines."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=_CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in result.rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(row).items()})
        for v, s in result.slopes.items():
            fh.write(f"# slope,{v},{s!r}\n")


def read_csv(path) -> BenchResult:
    rows, slopes = [], {}
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    for ln in lines:
        if ln.startswith("# slope,"):
            _, v, s = ln.split(",", 2)
            slopes[v] = float(s)
    casts = {"n": int, "m": int, "reps": int, "failures": int, "variant": str, "error": str}
    for rec in csv.DictReader(body):
        rows.append(BenchRow(**{k: casts.get(k, float)(val) for k, val in rec.items()}))
    return BenchResult(rows, slopes)


def format_table(result: BenchResult) -> str:
    """Side-by-side text table: one line per (n, m), one time column per variant."""
    variants = list(dict.fromkeys(r.variant for r in result.rows))
    by_key = {(r.n, r.m, r.variant): r for r in result.rows}
    head = f"{'n':>6} {'m':>7} " + " ".join(f"{v + ' s':>14} {v + ' s/it':>16}" for v in variants)
    lines = [head]
    for n, m in dict.fromkeys((r.n, r.m) for r in result.rows):
        cells = []
        for v in variants:
            r = by_key[(n, m, v)]
            cells.append(f"{r.mean_time_seconds:>14.4f} {r.mean_time_per_iteration:>16.3e}")
        lines.append(f"{n:>6} {m:>7} " + " ".join(cells))
    lines.append("slopes: " + ", ".join(f"{v}={s:.3f}" for v, s in result.slopes.items()))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# kernel backends


def _kernel_cases(n, rng):
    k = n // 2
    f = qr.factor(rng.standard_normal((n, k)))
    col, u, v = rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(k)
    return {
        "insert_column": lambda: qr.insert_column(f, col, 0),
        "delete_column": lambda: qr.delete_column(f, 0),
        "rank_one_update": lambda: qr.rank_one_update(f, u, v),
        "delete_row": lambda: qr.delete_row(f, 0),
    }


def bench_kernels(sizes=(50, 200, 800), reps: int = 5, seed: int = 0) -> list[dict]:
    """Best-of-``reps`` wall time of each QR update under every available backend."""
    out = []
    for n in sizes:
        cases = _kernel_cases(n, np.random.default_rng(seed))
        for backend in _backend.available():
            with _backend.using(backend):
                for op, fn in cases.items():
                    best = math.inf
                    for _ in range(reps):
                        t0 = time.perf_counter()
                        fn()
                        best = min(best, time.perf_counter() - t0)
                    out.append({"op": op, "n": n, "backend": backend, "seconds": best})
    return out
