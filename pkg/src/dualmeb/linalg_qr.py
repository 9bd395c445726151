"""Dense QR factorization with Givens-rotation updates.

A :class:`QrFactor` holds an explicit square orthogonal ``q`` (n x n) and an
upper-trapezoidal ``r`` (n x k, k <= n). Updates (column insert/delete, row
insert/delete, rank-one modification) cost O(n^2) or less and never
refactor from scratch. Every factor carries a shared :class:`QrStats`
instance so a whole lineage of updates can be audited.

Positions are 0-based.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _backend

#: Default relative tolerance for the diagonal rank test.
EPS_RANK = 1e-10


class QrError(ValueError):
    """Invalid input to a factorization routine (shape, position, non-finite data)."""


class SingularSystemError(ArithmeticError):
    """Triangular solve hit a pivot that is zero relative to the matrix scale."""

    def __init__(self, pivot: int, value: float):
        super().__init__(f"near-zero pivot {value:.3e} at index {pivot}")
        self.pivot = pivot
        self.value = value


class RankDeficientError(ArithmeticError):
    """The represented matrix is not of full column rank."""


@dataclass
class QrStats:
    """Instrumentation shared along a chain of updates."""

    from_scratch: int = 0
    updates: Counter = field(default_factory=Counter)

    @property
    def total_updates(self) -> int:
        return sum(self.updates.values())

    def snapshot(self) -> dict:
        return {"from_scratch": self.from_scratch, "updates": dict(self.updates)}


@dataclass
class QrFactor:
    q: np.ndarray
    r: np.ndarray
    stats: QrStats = field(default_factory=QrStats)

    @property
    def shape(self) -> tuple[int, int]:
        return self.r.shape

    @property
    def n(self) -> int:
        return self.r.shape[0]

    @property
    def k(self) -> int:
        return self.r.shape[1]

    def matrix(self) -> np.ndarray:
        """The represented matrix ``q @ r``."""
        return self.q @ self.r

    def diag(self) -> np.ndarray:
        return np.diagonal(self.r).copy()

    def scale(self) -> float:
        # rows below k are zero in an upper-trapezoidal r
        top = self.r[: self.k]
        return 1.0 + (float(np.abs(top).max()) if top.size else 0.0)

    def is_full_rank(self, tol: float = EPS_RANK) -> bool:
        if self.k == 0:
            return True
        return bool(np.abs(np.diagonal(self.r)).min() > tol * self.scale())

    def orthogonality_error(self) -> float:
        n = self.n
        return float(np.max(np.abs(self.q.T @ self.q - np.eye(n)))) if n else 0.0

    def copy(self) -> "QrFactor":
        return QrFactor(self.q.copy(order="F"), self.r.copy(order="F"), self.stats)


def _vector(v, size, what):
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape[0] != size:
        raise QrError(f"{what} has {v.shape[0]} entries, expected {size}")
    if not np.all(np.isfinite(v)):
        raise QrError(f"{what} has non-finite entries")
    return v


def _count(f: QrFactor, op: str) -> None:
    f.stats.updates[op] += 1


def factor(a, stats: QrStats | None = None) -> QrFactor:
    """Factor ``a`` (n x k, n >= k) from scratch with Householder reflections.

    Parameters
    ----------
    a : array_like
        Matrix with at least as many rows as columns.
    stats : QrStats, optional
        Counter to attach; a fresh one is created when omitted. Its
        ``from_scratch`` count is incremented.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1:
        raise QrError(f"expected a 2-D matrix with at least one row, got shape {a.shape}")
    n, k = a.shape
    if k > n:
        raise QrError(f"matrix is {n}x{k}; need rows >= cols")
    if not np.all(np.isfinite(a)):
        raise QrError("matrix has non-finite entries")
    stats = QrStats() if stats is None else stats
    stats.from_scratch += 1
    if k == 0:
        return QrFactor(np.eye(n, order="F"), np.zeros((n, 0), order="F"), stats)
    q, r = np.linalg.qr(a, mode="complete")
    r = np.triu(r)
    return QrFactor(np.asfortranarray(q), np.asfortranarray(r), stats)


def insert_column(f: QrFactor, col, pos: int, *, overwrite: bool = False) -> QrFactor:
    """Factor of the matrix with ``col`` inserted before column ``pos``.

    With ``overwrite=True`` the orthogonal factor of ``f`` is reused in place
    and ``f`` must not be used afterwards.
    """
    n, k = f.shape
    col = _vector(col, n, "column")
    if not 0 <= pos <= k:
        raise QrError(f"insert position {pos} outside [0, {k}]")
    if k + 1 > n:
        raise QrError(f"cannot insert a column into an {n}x{k} factor (would exceed rows)")
    q = f.q if overwrite else f.q.copy(order="F")
    r = np.empty((n, k + 1), order="F")
    r[:, :pos] = f.r[:, :pos]
    r[:, pos] = q.T @ col
    r[:, pos + 1:] = f.r[:, pos:]
    _backend.kernels.reduce_column(q, r, pos)
    _count(f, "insert_column")
    return QrFactor(q, r, f.stats)


def delete_column(f: QrFactor, pos: int, *, overwrite: bool = False) -> QrFactor:
    """Factor of the matrix with column ``pos`` removed; O(n k) rotations."""
    n, k = f.shape
    if not 0 <= pos < k:
        raise QrError(f"delete position {pos} outside [0, {k - 1}]")
    q = f.q if overwrite else f.q.copy(order="F")
    r = np.empty((n, k - 1), order="F")
    r[:, :pos] = f.r[:, :pos]
    r[:, pos:] = f.r[:, pos + 1:]
    _backend.kernels.reduce_hessenberg(q, r, pos, min(k - 1, n - 1))
    _count(f, "delete_column")
    return QrFactor(q, r, f.stats)


def insert_row(f: QrFactor, row, pos: int) -> QrFactor:
    """Factor of the (n+1) x k matrix with ``row`` inserted before row ``pos``."""
    n, k = f.shape
    row = _vector(row, k, "row")
    if not 0 <= pos <= n:
        raise QrError(f"insert position {pos} outside [0, {n}]")
    q = np.zeros((n + 1, n + 1), order="F")
    q[pos, 0] = 1.0
    q[:pos, 1:] = f.q[:pos]
    q[pos + 1:, 1:] = f.q[pos:]
    r = np.empty((n + 1, k), order="F")
    r[0] = row
    r[1:] = f.r
    _backend.kernels.reduce_hessenberg(q, r, 0, min(k, n))
    _count(f, "insert_row")
    return QrFactor(q, r, f.stats)


def delete_row(f: QrFactor, pos: int, *, overwrite: bool = False) -> QrFactor:
    """Factor of the (n-1) x k matrix with row ``pos`` removed."""
    n, k = f.shape
    if not 0 <= pos < n:
        raise QrError(f"delete position {pos} outside [0, {n - 1}]")
    if k > n - 1:
        raise QrError(f"cannot delete a row from an {n}x{k} factor (would leave rows < cols)")
    q = f.q if overwrite else f.q.copy(order="F")
    r = f.r if overwrite else f.r.copy(order="F")
    w = q[pos].copy()
    _backend.kernels.reduce_vector(q, r, w)
    # q[pos] is now e_0 and q[:, 0] is e_pos; peel both off.
    keep = np.r_[0:pos, pos + 1:n]
    q_new = np.asfortranarray(q[keep, 1:])
    r_new = np.asfortranarray(r[1:])
    _count(f, "delete_row")
    return QrFactor(q_new, r_new, f.stats)


def rank_one_update(f: QrFactor, u, v, *, overwrite: bool = False) -> QrFactor:
    """Factor of ``A + u v^T`` for the represented ``A``; O(n^2)."""
    n, k = f.shape
    u = _vector(u, n, "u")
    v = _vector(v, k, "v")
    q = f.q if overwrite else f.q.copy(order="F")
    r = f.r if overwrite else f.r.copy(order="F")
    if k:
        w = q.T @ u
        w0 = _backend.kernels.reduce_vector(q, r, w)
        r[0] += w0 * v
        _backend.kernels.reduce_hessenberg(q, r, 0, min(k, n - 1))
    _count(f, "rank_one_update")
    return QrFactor(q, r, f.stats)


def _triangular_args(r, b, tol):
    r = np.asfortranarray(r, dtype=np.float64)
    k = min(r.shape)
    b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
    if b.shape[0] < k:
        raise QrError(f"right-hand side has {b.shape[0]} entries, need {k}")
    if k:
        d = np.abs(np.diagonal(r)[:k])
        bad = np.flatnonzero(d <= tol * (1.0 + np.max(np.abs(r[:k, :k]))))
        if bad.size:
            i = int(bad[0])
            raise SingularSystemError(i, float(r[i, i]))
    return r, np.ascontiguousarray(b[:k]), k


def solve_upper(r, b, *, tol: float = EPS_RANK) -> np.ndarray:
    """Back substitution on the leading square block of ``r``."""
    r, b, k = _triangular_args(r, b, tol)
    return _backend.kernels.back_substitute(r, b, k)


def solve_lower_transposed(r, b, *, tol: float = EPS_RANK) -> np.ndarray:
    """Forward substitution for ``r[:k, :k].T y = b``."""
    r, b, k = _triangular_args(r, b, tol)
    return _backend.kernels.forward_substitute_t(r, b, k)


def _require_full_rank(f: QrFactor, tol: float) -> None:
    if not f.is_full_rank(tol):
        d = np.abs(f.diag())
        raise RankDeficientError(
            f"factor is rank deficient: min |diag(R)| = {d.min():.3e} at column {int(np.argmin(d))}"
        )


def null_basis(f: QrFactor, *, tol: float = EPS_RANK) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the column span (last n-k columns of q)."""
    _require_full_rank(f, tol)
    return f.q[:, f.k:]


def range_basis(f: QrFactor, *, tol: float = EPS_RANK) -> np.ndarray:
    """Orthonormal basis of the column span (first k columns of q)."""
    _require_full_rank(f, tol)
    return f.q[:, : f.k]
