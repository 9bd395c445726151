"""Points, balls, affine coordinates and projections onto affine hulls.

The lifted matrix of a point list ``S`` stacks the points (as columns) over a
row of ones; its QR factor answers affine-independence and affine-coordinate
questions. The row of ones sits last.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg_qr as qr
from .linalg_qr import EPS_RANK, QrFactor


class GeometryError(ValueError):
    pass


class DegenerateSupportError(ArithmeticError):
    """Affine coordinates requested over a numerically dependent point set."""


@dataclass
class PointSet:
    """``m`` points in ``R^n`` stored as the rows of ``coords``."""

    coords: np.ndarray
    labels: list | None = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise GeometryError(f"need a non-empty (m, n) coordinate array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise GeometryError("coordinates must be finite")
        if self.labels is not None and len(self.labels) != c.shape[0]:
            raise GeometryError("labels length does not match the number of points")
        self.coords = c

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def count(self) -> int:
        return self.coords.shape[0]

    def __len__(self):
        return self.count

    def __getitem__(self, i):
        return self.coords[i]

    def deduplicated(self) -> tuple["PointSet", np.ndarray, np.ndarray]:
        """Drop exact duplicate rows, keeping first occurrences in order.

        Returns ``(reduced, keep, inverse)``: ``keep[u]`` is the original index
        of reduced point ``u`` and ``inverse[i]`` the reduced index of
        original point ``i``.
        """
        _, first, inv = np.unique(self.coords, axis=0, return_index=True, return_inverse=True)
        order = np.argsort(first)
        keep = first[order]
        renumber = np.empty_like(order)
        renumber[order] = np.arange(order.size)
        inverse = renumber[np.asarray(inv).reshape(-1)]
        labels = None if self.labels is None else [self.labels[i] for i in keep]
        return PointSet(self.coords[keep], labels), keep, inverse


@dataclass
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64).reshape(-1)
        self.radius = float(self.radius)
        if self.radius < 0 or not np.isfinite(self.radius):
            raise GeometryError(f"invalid radius {self.radius}")
        if not np.all(np.isfinite(self.center)):
            raise GeometryError("center must be finite")

    def contains(self, y, tol: float = 1e-9) -> bool:
        return bool(np.linalg.norm(np.asarray(y) - self.center) <= self.radius * (1 + tol) + tol)


@dataclass(frozen=True)
class SupportSet:
    """Ordered point indices of an affinely independent working set."""

    indices: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise GeometryError(f"duplicate indices in support set {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass
class AffineCoeffs:
    coeffs: np.ndarray
    target_sum: float

    def __post_init__(self):
        if abs(float(np.sum(self.coeffs)) - self.target_sum) > 1e-9 * (1 + np.max(np.abs(self.coeffs), initial=0)):
            raise DegenerateSupportError(
                f"coefficients sum to {np.sum(self.coeffs):.12g}, expected {self.target_sum}"
            )


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.direction)) or not np.any(self.direction):
            raise GeometryError("ray direction must be finite and nonzero")

    def at(self, alpha: float) -> np.ndarray:
        return self.origin + alpha * self.direction


def lift(points) -> np.ndarray:
    """Points as columns over a row of ones: shape (n+1, s)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return np.vstack([pts.T, np.ones(pts.shape[0])])


def lifted(y, last: float = 1.0) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    out = np.empty(y.shape[0] + 1)
    out[:-1] = y
    out[-1] = last
    return out


def affine_coeffs(b_factor: QrFactor, y, target_sum: float = 1.0, *, tol: float = EPS_RANK) -> AffineCoeffs:
    """Coefficients ``c`` with ``sum_j c_j s_j = y`` and ``sum_j c_j = target_sum``.

    ``b_factor`` factors the lifted support matrix. The system is solved as
    ``R c = Q^T (y; target_sum)`` by back substitution.
    """
    k = b_factor.k
    rhs = b_factor.q[:, :k].T @ lifted(y, target_sum)
    try:
        c = qr.solve_upper(b_factor.r[:k, :k], rhs, tol=tol)
    except qr.SingularSystemError as exc:
        raise DegenerateSupportError(f"support is numerically dependent (pivot {exc.pivot})") from exc
    return AffineCoeffs(c, float(target_sum))


def is_affinely_independent_with(b_factor: QrFactor, p, *, tol: float = EPS_RANK):
    """Test whether the support plus ``p`` stays affinely independent.

    Returns ``(independent, extended_factor)``; the second item is the factor
    of the lifted matrix with ``(p; 1)`` appended, or ``None`` when the
    support already has ``n + 1`` points (dependence is then automatic).
    """
    rows, k = b_factor.shape
    if k >= rows:
        return False, None
    ext = qr.insert_column(b_factor, lifted(p), k)
    independent = abs(ext.r[k, k]) > tol * ext.scale()
    return independent, ext


def lifted_residual(b_factor: QrFactor, y) -> float:
    """Norm of the part of ``(y; 1)`` outside the span of the lifted support.

    This is the magnitude the independence test would see on the new
    diagonal entry, without performing the update.
    """
    w = b_factor.q.T @ lifted(y)
    return float(np.linalg.norm(w[b_factor.k:]))


def project_to_affine_hull(v, anchor, y) -> np.ndarray:
    """Orthogonal projection of ``y`` onto ``anchor + span(v)``; ``v`` orthonormal."""
    v = np.asarray(v, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    t = np.asarray(y, dtype=np.float64) - anchor
    if v.shape[1] == 0:
        return anchor.copy()
    return v @ (v.T @ t) + anchor


def two_point_ball(a, b) -> Ball:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    center = 0.5 * (a + b)
    return Ball(center, float(np.linalg.norm(a - center)))
