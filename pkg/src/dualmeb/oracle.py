"""Brute-force reference solutions for small instances.

The minimum covering ball is the circumball of some affinely independent
subset whose circumcenter lies in the subset's convex hull and which covers
every point. Enumerating all subsets of size ``1..n+1`` and keeping the
smallest such ball gives an exact answer, at combinatorial cost.

Nothing here touches the QR update code, so the solver can be checked
against it independently.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry import Ball, DegenerateSupportError, PointSet, SupportSet

#: Smallest convex coefficient still accepted (admits boundary-degenerate optima).
COEFF_TOL = -1e-10
#: Relative slack when testing whether a candidate covers every point.
COVER_TOL = 1e-9

MAX_POINTS = 15
MAX_DIM = 6


class InstanceTooLarge(ValueError):
    pass


@dataclass
class CandidateBall:
    """Circumball of one affinely independent subset.

    ``interior_ok`` says the center has nonnegative convex coefficients with
    respect to the subset; ``covers`` says every input point is inside.
    """

    ball: Ball
    subset: SupportSet
    interior_ok: bool
    covers: bool = False


def circumball(points) -> Ball:
    """Smallest ball with all of ``points`` on its boundary.

    The center is ``s_0 + V^T lam`` with ``V`` the rows ``s_i - s_0``; the
    equidistance conditions reduce to the Gram system
    ``(V V^T) lam = diag(V V^T) / 2``.

    Raises
    ------
    DegenerateSupportError
        If the points are affinely dependent.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    k, n = pts.shape
    if k == 0:
        raise DegenerateSupportError("no points given")
    if k == 1:
        return Ball(pts[0], 0.0)
    v = pts[1:] - pts[0]
    if k - 1 > n or np.linalg.matrix_rank(v) < k - 1:
        raise DegenerateSupportError(f"{k} points in R^{n} are affinely dependent")
    g = v @ v.T
    lam = np.linalg.solve(g, 0.5 * np.diag(g))
    center = pts[0] + lam @ v
    return Ball(center, float(np.max(np.linalg.norm(pts - center, axis=1))))


def _batch(pts: np.ndarray, combos: np.ndarray, sqnorms: np.ndarray):
    """Circumballs of many equal-size subsets at once.

    Returns ``(valid, centers, radii, interior_ok, covers)``; rows with
    ``valid == False`` are affinely dependent and carry garbage.
    """
    sub = pts[combos]  # (N, k, n)
    base = sub[:, 0]
    cnt, k = combos.shape
    if k == 1:
        centers = base.copy()
        lam = np.zeros((cnt, 0))
        valid = np.ones(cnt, dtype=bool)
    else:
        v = sub[:, 1:] - base[:, None, :]
        valid = np.linalg.matrix_rank(v) == k - 1
        g = v @ np.swapaxes(v, 1, 2)
        rhs = 0.5 * np.einsum("nii->ni", g)
        # keep singular systems from raising; they are masked out anyway
        g[~valid] = np.eye(k - 1)
        lam = np.linalg.solve(g, rhs[..., None])[..., 0]
        centers = base + np.einsum("ni,nij->nj", lam, v)
    radii = np.linalg.norm(sub - centers[:, None, :], axis=2).max(axis=1)
    coeffs = np.concatenate([1.0 - lam.sum(axis=1, keepdims=True), lam], axis=1)
    interior_ok = coeffs.min(axis=1) >= COEFF_TOL
    d2 = sqnorms[None, :] - 2.0 * centers @ pts.T + np.einsum("ij,ij->i", centers, centers)[:, None]
    limit = radii * (1.0 + COVER_TOL) + COVER_TOL
    covers = d2.max(axis=1) <= limit * limit
    return valid, centers, radii, interior_ok, covers


def _prepare(points, max_points, max_dim):
    ps = points if isinstance(points, PointSet) else PointSet(points)
    m, n = ps.count, ps.dim
    if m > max_points or n > max_dim:
        raise InstanceTooLarge(f"instance with m={m}, n={n} exceeds the brute-force limit ({max_points}, {max_dim})")
    # shift for conditioning; balls are shifted back on the way out
    shift = ps.coords.mean(axis=0)
    return ps.coords - shift, shift


def _sizes(m, n):
    return range(1, min(m, n + 1) + 1)


def enumerate_candidates(points, *, max_points: int = MAX_POINTS, max_dim: int = MAX_DIM) -> list[CandidateBall]:
    """Every affinely independent subset with its circumball, in lexicographic order."""
    pts, shift = _prepare(points, max_points, max_dim)
    m, n = pts.shape
    sqnorms = np.einsum("ij,ij->i", pts, pts)
    out = []
    for k in _sizes(m, n):
        combos = np.array(list(combinations(range(m), k)), dtype=np.intp)
        valid, centers, radii, interior, covers = _batch(pts, combos, sqnorms)
        for i in np.flatnonzero(valid):
            out.append(
                CandidateBall(
                    Ball(centers[i] + shift, radii[i]),
                    SupportSet(tuple(int(t) for t in combos[i])),
                    bool(interior[i]),
                    bool(covers[i]),
                )
            )
    return out


def brute_force_mb(points, *, max_points: int = MAX_POINTS, max_dim: int = MAX_DIM) -> tuple[Ball, SupportSet]:
    """Exact minimum covering ball by exhaustive subset enumeration.

    Among subsets whose circumcenter has nonnegative convex coefficients and
    whose circumball covers all points, returns the one of least radius. Ties
    go to the first subset in (size, lexicographic) order.

    Raises
    ------
    InstanceTooLarge
        When ``m > max_points`` or ``n > max_dim``.
    """
    pts, shift = _prepare(points, max_points, max_dim)
    m, n = pts.shape
    sqnorms = np.einsum("ij,ij->i", pts, pts)
    best = None
    for k in _sizes(m, n):
        combos = np.array(list(combinations(range(m), k)), dtype=np.intp)
        valid, centers, radii, interior, covers = _batch(pts, combos, sqnorms)
        ok = np.flatnonzero(valid & interior & covers)
        if ok.size == 0:
            continue
        i = int(ok[np.argmin(radii[ok])])  # argmin keeps the first of equal radii
        if best is None or radii[i] < best[0] * (1.0 - 1e-12):
            best = (float(radii[i]), centers[i], combos[i])
    if best is None:  # cannot happen for finite input; the MB always has such a subset
        raise DegenerateSupportError("no covering candidate found")
    r, c, idx = best
    return Ball(c + shift, r), SupportSet(tuple(int(t) for t in idx))
