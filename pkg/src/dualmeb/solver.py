"""Dual pivoting solver for the Euclidean minimum covering ball.

Each outer iteration takes an uncovered point ``p``, makes room for it in
the support set if needed, then runs directional searches from the current
center toward ``p`` until the circumcenter of ``support + p`` is reached.
Two facet searches are available:

``scan``
    Intersects the search ray with every facet through ``p``. One QR update
    per facet, so Theta(s) updates per search.
``projection``
    Projects the center and ``p`` onto the affine hull of the old support and
    reads the two candidate facets off their affine coordinates. A constant
    number of QR updates per search.

Throughout, the support stays affinely independent and the center stays in
its convex hull. The lifted support matrix (points over a row of ones) is
factored once and then only updated.
"""
from __future__ import annotations

import math
import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import linalg_qr as qr
from .geometry import (
    Ball,
    DegenerateSupportError,
    PointSet,
    SupportSet,
    affine_coeffs,
    is_affinely_independent_with,
    lift,
    lifted,
    lifted_residual,
    project_to_affine_hull,
)
from .linalg_qr import EPS_RANK, QrFactor, QrStats

VARIANTS = ("scan", "projection")
VIOLATOR_RULES = ("farthest", "first", "farthest_filtered")

#: Negative step lengths above this are roundoff and get clamped to zero.
ALPHA_CLAMP = 1e-12


class SolverError(RuntimeError):
    """Base class for solver failures; ``subsystem`` names the failing stage."""

    def __init__(self, message: str, subsystem: str = "solver", report=None):
        super().__init__(f"[{subsystem}] {message}")
        self.subsystem = subsystem
        self.report = report


class DegeneracyError(SolverError):
    pass


class InvariantViolation(DegeneracyError):
    pass


class NonTerminationError(SolverError):
    pass


@dataclass
class SolverConfig:
    variant: str = "projection"
    coverage_tol: float = 1e-9
    rank_tol: float = EPS_RANK
    case1_tol: float = 1e-10
    violator_rule: str = "farthest"
    max_iterations: int | None = None
    # Debug aids: per-iteration invariant log plus orthogonality guard, and
    # running the other facet search alongside for comparison.
    validate: bool = False
    shadow_search: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.violator_rule not in VIOLATOR_RULES:
            raise ValueError(f"violator_rule must be one of {VIOLATOR_RULES}, got {self.violator_rule!r}")
        for name in ("coverage_tol", "rank_tol", "case1_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class SearchOutcome:
    kind: str  # "bisector_hit" or "facet_hit"
    alpha: float
    leaving_index: int | None = None

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise InvariantViolation(f"step length {self.alpha} is not a finite nonnegative number", "search")
        if (self.kind == "facet_hit") != (self.leaving_index is not None):
            raise InvariantViolation("leaving index must be present exactly for facet hits", "search")


@dataclass
class SolveReport:
    variant: str
    iterations: int = 0
    radius_trace: list = field(default_factory=list)
    drops_per_iteration: list = field(default_factory=list)
    support_size_final: int = 0
    searches: int = 0
    phase_times: dict = field(default_factory=lambda: defaultdict(float))
    qr_stats: QrStats | None = None
    updates_per_search: list = field(default_factory=list)
    refactorizations: int = 0
    orthogonality_error: float | None = None
    invariant_log: list = field(default_factory=list)
    search_log: list = field(default_factory=list)
    time_seconds: float = 0.0

    @property
    def time_per_iteration(self) -> float:
        return self.time_seconds / max(self.iterations, 1)


# ---------------------------------------------------------------------------
# directional search building blocks


@dataclass
class SearchState:
    """Everything a facet search needs.

    ``support`` holds the old support points as rows, the last one being the
    anchor of the difference matrix ``C = [s_0 - a, ..., s_{k-2} - a, p - a]``.
    ``b_factor`` factors the lifted old support, ``c_factor`` factors ``C``.
    """

    support: np.ndarray
    p: np.ndarray
    x: np.ndarray
    c_factor: QrFactor
    b_factor: QrFactor
    d: np.ndarray

    @property
    def k(self) -> int:
        return self.support.shape[0]

    @classmethod
    def from_points(cls, support, p, x, *, rank_tol: float = EPS_RANK) -> "SearchState":
        """Build a state with from-scratch factorizations (tests, diagnostics)."""
        support = np.atleast_2d(np.asarray(support, dtype=np.float64))
        p = np.asarray(p, dtype=np.float64)
        a = support[-1]
        stats = QrStats()
        c = np.column_stack([(support[:-1] - a).T, p - a])
        c_factor = qr.factor(c, stats)
        b_factor = qr.factor(lift(support), stats)
        d = compute_direction(c_factor, rank_tol=rank_tol)
        return cls(support, p, np.asarray(x, dtype=np.float64), c_factor, b_factor, d)


def difference_factor(b_factor: QrFactor, anchor, p) -> QrFactor:
    """Factor of ``C`` obtained from the lifted support factor by updates.

    Subtracting ``(a; 1)`` from every column and adding ``(p - a; 0)`` to the
    last gives ``C`` stacked over a zero row, which is then deleted.
    """
    k = b_factor.k
    f = qr.rank_one_update(b_factor, -lifted(anchor), np.ones(k))
    e_last = np.zeros(k)
    e_last[-1] = 1.0
    f = qr.rank_one_update(f, lifted(np.asarray(p) - anchor, 0.0), e_last, overwrite=True)
    return qr.delete_row(f, f.n - 1, overwrite=True)


def compute_direction(c_factor: QrFactor, *, rank_tol: float = EPS_RANK) -> np.ndarray:
    """Search direction ``d`` in the span of ``C`` with ``C^T d = e_last``.

    One forward substitution with ``R^T`` and one product with the leading
    columns of ``Q``.
    """
    k = c_factor.k
    e = np.zeros(k)
    e[-1] = 1.0
    try:
        y = qr.solve_lower_transposed(c_factor.r[:k, :k], e, tol=rank_tol)
    except qr.SingularSystemError as exc:
        raise DegeneracyError(f"difference matrix is singular at pivot {exc.pivot}", "direction") from exc
    return c_factor.q[:, :k] @ y


def alpha_bisector(x, r_cur: float, p) -> float:
    """Step along ``d`` at which ``p`` becomes as far as the old support.

    With ``(p - a)^T d = 1`` and ``d`` orthogonal to the old support's hull,
    ``|x + t d - p|^2 - |x + t d - a|^2 = |x - p|^2 - r_cur^2 - 2 t``.
    """
    diff = np.asarray(p) - np.asarray(x)
    return 0.5 * (float(diff @ diff) - r_cur * r_cur)


def facet_factor(c_factor: QrFactor, j: int, anchor, p) -> QrFactor:
    """Factor of the differences spanning the facet opposite old support point ``j``.

    Non-anchor ``j``: drop column ``j`` of ``C``. Anchor: drop the last column
    and re-anchor the rest at ``p`` with a rank-one update.
    """
    k = c_factor.k
    if j < k - 1:
        return qr.delete_column(c_factor, j)
    f = qr.delete_column(c_factor, k - 1)
    return qr.rank_one_update(f, np.asarray(anchor) - p, np.ones(k - 1), overwrite=True)


def facet_alpha(f_factor: QrFactor, x, p, d, *, case1_tol: float, rank_tol: float = EPS_RANK) -> float:
    """Where the line ``x + t d`` meets the affine hull of a facet through ``p``.

    Uses the null-space column with the largest ``|d^T w|``. Returns ``0`` if
    the line lies inside that hull and ``inf`` if it runs parallel to it.
    """
    try:
        w = qr.null_basis(f_factor, tol=rank_tol)
    except qr.RankDeficientError as exc:
        raise DegeneracyError(str(exc), "facet_search") from exc
    px = p - x
    t, gap = np.vstack((d, px)) @ w  # one pass over w
    i = int(np.argmax(np.abs(t)))
    if abs(t[i]) <= case1_tol * (1.0 + math.sqrt(d @ d)):
        if np.max(np.abs(gap)) <= case1_tol * (1.0 + math.sqrt(px @ px)):
            return 0.0
        return math.inf
    return float(gap[i] / t[i])


def _pick_alpha(alphas, subsystem):
    best = None
    for j, a in alphas:
        if a >= -ALPHA_CLAMP and (best is None or a < best[1]):
            best = (j, a)
    if best is None:
        raise DegeneracyError("no facet is met ahead of the current center", subsystem)
    return max(best[1], 0.0), best[0]


def facet_search_scan(state: SearchState, *, case1_tol: float = 1e-10, rank_tol: float = EPS_RANK, info=None):
    """First facet hit by the ray, found by intersecting every facet through ``p``.

    Returns ``(alpha_f, leaving)`` with ``leaving`` an index into ``state.support``.
    """
    a = state.support[-1]
    alphas = []
    for j in range(state.k):
        f = facet_factor(state.c_factor, j, a, state.p)
        alphas.append((j, facet_alpha(f, state.x, state.p, state.d, case1_tol=case1_tol, rank_tol=rank_tol)))
    if info is not None:
        info["alphas"] = [al for _, al in alphas]
    return _pick_alpha(alphas, "facet_search_scan")


def facet_search_projection(state: SearchState, *, case1_tol: float = 1e-10, rank_tol: float = EPS_RANK, info=None):
    """First facet hit by the ray, found from projected affine coordinates.

    Projects ``x`` and ``p`` onto the old support's affine hull, takes their
    affine coordinates ``pi`` and ``omega`` there, and checks at most two
    candidate facets. Returns ``(alpha_f, leaving)``.
    """
    k = state.k
    v = state.c_factor.q[:, : k - 1]
    anchor = state.support[0]
    x_proj = project_to_affine_hull(v, anchor, state.x)
    p_proj = project_to_affine_hull(v, anchor, state.p)
    try:
        pi = affine_coeffs(state.b_factor, x_proj, 1.0, tol=rank_tol).coeffs
        om = affine_coeffs(state.b_factor, p_proj, 1.0, tol=rank_tol).coeffs
    except DegenerateSupportError as exc:
        raise DegeneracyError(str(exc), "facet_search_projection") from exc
    tol_pi = case1_tol * (1.0 + np.max(np.abs(pi)))
    tol_om = case1_tol * (1.0 + np.max(np.abs(om)))
    if info is not None:
        info.update(pi=pi, omega=om)

    # facet containing the whole ray: both coordinates vanish
    flat = np.flatnonzero((np.abs(pi) <= tol_pi) & (np.abs(om) <= tol_om))
    if flat.size:
        if info is not None:
            info["case"] = 1
        return 0.0, int(flat[0])

    pi = np.where(np.abs(pi) <= tol_pi, 0.0, pi)
    ahead = np.flatnonzero((pi >= 0) & (om > 0))
    behind = np.flatnonzero((pi <= 0) & (om < 0))
    if ahead.size == 0 and behind.size == 0:
        raise InvariantViolation("projected center has no representation on any facet", "facet_search_projection")
    a = state.support[-1]
    candidates = []
    for idx, pick in ((ahead, np.argmin), (behind, np.argmax)):
        if idx.size:
            j = int(idx[pick(pi[idx] / om[idx])])
            f = facet_factor(state.c_factor, j, a, state.p)
            candidates.append((j, facet_alpha(f, state.x, state.p, state.d, case1_tol=case1_tol, rank_tol=rank_tol)))
    if info is not None:
        info["case"] = 2
        info["candidates"] = candidates
    candidates.sort()  # equal steps resolve to the smaller index
    return _pick_alpha(candidates, "facet_search_projection")


_SEARCHES = {"scan": facet_search_scan, "projection": facet_search_projection}


def directional_step(state: SearchState, config: SolverConfig, report: SolveReport | None = None):
    """One directional search; returns ``(new_x, SearchOutcome)``.

    A tie between the bisector and a facet goes to the facet.
    """
    x = state.x
    r_cur = float(np.linalg.norm(x - state.support[-1]))
    alpha_b = alpha_bisector(x, r_cur, state.p)
    primary_info = {}
    alpha_f, leave = _SEARCHES[config.variant](
        state, case1_tol=config.case1_tol, rank_tol=config.rank_tol, info=primary_info
    )
    if report is not None and config.shadow_search:
        other = "projection" if config.variant == "scan" else "scan"
        other_info = {}
        o_alpha, o_leave = _SEARCHES[other](
            state, case1_tol=config.case1_tol, rank_tol=config.rank_tol, info=other_info
        )
        scan_info = primary_info if config.variant == "scan" else other_info
        report.search_log.append(
            {
                "alpha_b": alpha_b,
                config.variant: (alpha_f, leave),
                other: (o_alpha, o_leave),
                "tie": _is_tie(scan_info["alphas"]),
            }
        )
    if alpha_b < alpha_f:
        return x + alpha_b * state.d, SearchOutcome("bisector_hit", max(alpha_b, 0.0))
    return x + alpha_f * state.d, SearchOutcome("facet_hit", alpha_f, leave)


def _is_tie(alphas, rel=1e-9):
    ahead = sorted(a for a in alphas if a >= -ALPHA_CLAMP)
    return len(ahead) >= 2 and ahead[1] - ahead[0] <= rel * (1.0 + abs(ahead[0]))


# ---------------------------------------------------------------------------
# outer iteration pieces


def select_violator(points, center, radius, rule="farthest", *, tol=1e-9, b_factor=None,
                    rank_tol=EPS_RANK, sqnorms=None):
    """Index of an uncovered point, or ``None`` when the ball covers everything.

    ``farthest_filtered`` walks the uncovered points from farthest inward and
    returns the first whose lifted residual against the support exceeds
    ``10 * rank_tol * scale``, falling back to the farthest.
    """
    pts = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    if sqnorms is None:
        diff = pts - center
        d2 = np.einsum("ij,ij->i", diff, diff)
    else:
        d2 = sqnorms - 2.0 * (pts @ center) + center @ center
    limit = radius * (1.0 + tol) + tol
    uncovered = np.flatnonzero(d2 > limit * limit)
    if uncovered.size == 0:
        return None
    if rule == "first":
        return int(uncovered[0])
    far = int(uncovered[np.argmax(d2[uncovered])])
    if rule == "farthest" or b_factor is None:
        return far
    threshold = 10.0 * rank_tol * b_factor.scale()
    for i in uncovered[np.argsort(-d2[uncovered], kind="stable")]:
        if lifted_residual(b_factor, pts[i]) > threshold:
            return int(i)
    return far


def update_support(b_factor: QrFactor, p, x, *, rank_tol: float = EPS_RANK):
    """Make room for ``p`` in the support.

    Returns ``(b_factor, dropped)``. When ``support + p`` is affinely
    independent nothing changes and ``dropped`` is ``None``; otherwise the
    support point with the smallest ratio ``pi_j / -omega_j`` over
    ``omega_j < 0`` is removed from the factor and its position returned.
    """
    independent, _ = is_affinely_independent_with(b_factor, p, tol=rank_tol)
    if independent:
        return b_factor, None
    try:
        pi = affine_coeffs(b_factor, x, 1.0, tol=rank_tol).coeffs
        om = affine_coeffs(b_factor, -np.asarray(p), -1.0, tol=rank_tol).coeffs
    except DegenerateSupportError as exc:
        raise DegeneracyError(str(exc), "update_support") from exc
    neg = np.flatnonzero(om < -1e-14 * (1.0 + np.max(np.abs(om))))
    if neg.size == 0:
        raise InvariantViolation("no negative coefficient for the entering point", "update_support")
    k = int(neg[np.argmin(pi[neg] / -om[neg])])
    return qr.delete_column(b_factor, k, overwrite=True), k


def _initial_pair(pts):
    d0 = np.einsum("ij,ij->i", pts - pts[0], pts - pts[0])
    a = int(np.argmax(d0))
    da = np.einsum("ij,ij->i", pts - pts[a], pts - pts[a])
    b = int(np.argmax(da))
    return [a, b] if a != b else [0, a]


def _check_invariants(pts, support, x, r, stats_row):
    s = pts[support]
    dist = np.linalg.norm(s - x, axis=1)
    lam = np.linalg.lstsq(lift(s), lifted(x), rcond=None)[0]
    stats_row.update(
        equidistance=float(np.max(np.abs(dist - r)) / (1.0 + r)),
        min_coeff=float(lam.min()),
        coeff_sum_error=float(abs(lam.sum() - 1.0)),
        support_size=len(support),
        radius=r,
    )
    return stats_row


def solve(points, config: SolverConfig | None = None, warm_start=None):
    """Minimum covering ball of ``points``.

    Parameters
    ----------
    points : PointSet or array_like of shape (m, n)
    config : SolverConfig, optional
    warm_start : tuple(SupportSet, Ball), optional
        A support set (indices into ``points``) with its own minimum covering
        ball, for example the answer to a subproblem.

    Returns
    -------
    ball : Ball
    support : SupportSet
        Indices into ``points``; exact duplicates resolve to their first
        occurrence.
    report : SolveReport
    """
    cfg = config or SolverConfig()
    t_start = time.perf_counter()
    ps = points if isinstance(points, PointSet) else PointSet(points)
    uniq, keep, inverse = ps.deduplicated()
    shift = uniq.coords.mean(axis=0)
    pts = uniq.coords - shift
    m, n = pts.shape
    report = SolveReport(variant=cfg.variant)
    times = report.phase_times

    if m == 1:
        report.radius_trace.append(0.0)
        report.support_size_final = 1
        report.qr_stats = QrStats()
        report.time_seconds = time.perf_counter() - t_start
        return Ball(uniq.coords[0], 0.0), SupportSet((int(keep[0]),)), report

    max_iter = cfg.max_iterations or 10 * (n + 2) * m
    if warm_start is not None:
        ws_support, ws_ball = warm_start
        support = list(dict.fromkeys(int(inverse[i]) for i in ws_support))
        if not 1 <= len(support) <= n + 1:
            raise ValueError(f"warm-start support has {len(support)} points; need 1..{n + 1}")
        x = np.asarray(ws_ball.center, dtype=np.float64) - shift
    else:
        support = _initial_pair(pts)
        x = 0.5 * (pts[support[0]] + pts[support[1]])
    stats = QrStats()
    b = qr.factor(lift(pts[support]), stats)
    if not b.is_full_rank(cfg.rank_tol):
        raise ValueError("warm-start support is not affinely independent")
    r = float(np.max(np.linalg.norm(pts[support] - x, axis=1)))
    report.radius_trace.append(r)
    sqnorms = np.einsum("ij,ij->i", pts, pts)

    while True:
        t0 = time.perf_counter()
        j = select_violator(pts, x, r, cfg.violator_rule, tol=cfg.coverage_tol, b_factor=b,
                            rank_tol=cfg.rank_tol, sqnorms=sqnorms)
        times["violator"] += time.perf_counter() - t0
        if j is None:
            break
        if report.iterations >= max_iter:
            report.time_seconds = time.perf_counter() - t_start
            raise NonTerminationError(f"iteration cap {max_iter} reached", "solve", report)
        report.iterations += 1
        p = pts[j]
        drops = 0

        t0 = time.perf_counter()
        b, dropped = update_support(b, p, x, rank_tol=cfg.rank_tol)
        if dropped is not None:
            support.pop(dropped)
            drops += 1
        times["update_support"] += time.perf_counter() - t0

        while True:
            if not support:
                raise InvariantViolation("support emptied during the directional search", "directional_step", report)
            report.searches += 1
            before = stats.total_updates
            t0 = time.perf_counter()
            anchor = pts[support[-1]]
            c = difference_factor(b, anchor, p)
            d = compute_direction(c, rank_tol=cfg.rank_tol)
            state = SearchState(pts[support], p, x, c, b, d)
            t1 = time.perf_counter()
            times["direction"] += t1 - t0
            try:
                x, outcome = directional_step(state, cfg, report)
            except SolverError as exc:
                exc.report = report
                raise
            t2 = time.perf_counter()
            times["facet_search"] += t2 - t1
            if outcome.kind == "bisector_hit":
                report.updates_per_search.append(stats.total_updates - before)
                break
            support.pop(outcome.leaving_index)
            b = qr.delete_column(b, outcome.leaving_index, overwrite=True)
            drops += 1
            report.updates_per_search.append(stats.total_updates - before)
            times["bookkeeping"] += time.perf_counter() - t2

        t0 = time.perf_counter()
        b = qr.insert_column(b, lifted(p), len(support), overwrite=True)
        support.append(j)
        r = float(np.linalg.norm(x - p))
        report.radius_trace.append(r)
        report.drops_per_iteration.append(drops)
        times["bookkeeping"] += time.perf_counter() - t0

        if cfg.validate:
            t0 = time.perf_counter()
            if b.orthogonality_error() > 1e-12 * (n + 1):
                b = qr.factor(lift(pts[support]), stats)
                report.refactorizations += 1
            report.invariant_log.append(_check_invariants(pts, support, x, r, {"iteration": report.iterations}))
            times["validate"] += time.perf_counter() - t0

    report.support_size_final = len(support)
    report.qr_stats = stats
    if cfg.validate:
        report.orthogonality_error = b.orthogonality_error()
    radius = float(np.max(np.linalg.norm(pts[support] - x, axis=1)))
    report.time_seconds = time.perf_counter() - t_start
    return Ball(x + shift, radius), SupportSet(tuple(int(keep[i]) for i in support)), report
