# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Givens-rotation kernels for the QR update routines.

All routines work in place on Fortran-ordered float64 arrays: ``q`` is the
square orthogonal factor, ``r`` the upper-trapezoidal factor. The pure
numpy twin lives in ``_kernels_py``; both must produce the same rotations.
"""
import numpy as np
from libc.math cimport hypot

BACKEND = "compiled"


cdef inline void _givens(double a, double b, double* c, double* s, double* h) noexcept nogil:
    h[0] = hypot(a, b)
    if h[0] == 0.0:
        c[0] = 1.0
        s[0] = 0.0
    else:
        c[0] = a / h[0]
        s[0] = b / h[0]


cdef inline void _rot_cols(double[::1, :] q, Py_ssize_t i, Py_ssize_t j,
                           double c, double s) noexcept nogil:
    cdef Py_ssize_t t, n = q.shape[0]
    cdef double a, b
    cdef double* qi = &q[0, i]
    cdef double* qj = &q[0, j]
    for t in range(n):
        a = qi[t]
        b = qj[t]
        qi[t] = c * a + s * b
        qj[t] = c * b - s * a


cdef inline void _rot_rows(double[::1, :] r, Py_ssize_t i, Py_ssize_t j,
                           Py_ssize_t c0, double c, double s) noexcept nogil:
    cdef Py_ssize_t t, k = r.shape[1]
    cdef double a, b
    for t in range(c0, k):
        a = r[i, t]
        b = r[j, t]
        r[i, t] = c * a + s * b
        r[j, t] = c * b - s * a


def reduce_column(double[::1, :] q, double[::1, :] r, Py_ssize_t pos):
    """Zero ``r[pos+1:, pos]`` bottom-up; rows ``(i-1, i)`` rotate together."""
    cdef Py_ssize_t i, n = r.shape[0], c0
    cdef double c, s, h
    with nogil:
        for i in range(n - 1, pos, -1):
            if r[i, pos] == 0.0:
                continue
            _givens(r[i - 1, pos], r[i, pos], &c, &s, &h)
            r[i - 1, pos] = h
            r[i, pos] = 0.0
            c0 = i - 1 if i - 1 > pos + 1 else pos + 1
            _rot_rows(r, i - 1, i, c0, c, s)
            _rot_cols(q, i - 1, i, c, s)


def reduce_hessenberg(double[::1, :] q, double[::1, :] r, Py_ssize_t start, Py_ssize_t stop):
    """Zero the subdiagonal ``r[i+1, i]`` for ``start <= i < stop``."""
    cdef Py_ssize_t i
    cdef double c, s, h
    with nogil:
        for i in range(start, stop):
            if r[i + 1, i] == 0.0:
                continue
            _givens(r[i, i], r[i + 1, i], &c, &s, &h)
            r[i, i] = h
            r[i + 1, i] = 0.0
            _rot_rows(r, i, i + 1, i + 1, c, s)
            _rot_cols(q, i, i + 1, c, s)


def reduce_vector(double[::1, :] q, double[::1, :] r, double[::1] w):
    """Rotate ``w`` onto ``e_0`` bottom-up, carrying ``r`` rows and ``q`` columns.

    Leaves ``r`` upper Hessenberg and returns the surviving ``w[0]``.
    """
    cdef Py_ssize_t i, n = w.shape[0]
    cdef double c, s, h
    with nogil:
        for i in range(n - 1, 0, -1):
            if w[i] == 0.0:
                continue
            _givens(w[i - 1], w[i], &c, &s, &h)
            w[i - 1] = h
            w[i] = 0.0
            _rot_rows(r, i - 1, i, i - 1, c, s)
            _rot_cols(q, i - 1, i, c, s)
    return w[0]


def back_substitute(double[::1, :] r, const double[::1] b, Py_ssize_t k):
    """Solve ``r[:k, :k] y = b[:k]`` column-oriented (contiguous in F order)."""
    cdef double[::1] y = np.array(b[:k], dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double yj
    with nogil:
        for j in range(k - 1, -1, -1):
            yj = y[j] / r[j, j]
            y[j] = yj
            for i in range(j):
                y[i] -= yj * r[i, j]
    return np.asarray(y)


def forward_substitute_t(double[::1, :] r, const double[::1] b, Py_ssize_t k):
    """Solve ``r[:k, :k].T y = b[:k]``."""
    cdef double[::1] y = np.array(b[:k], dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double acc
    with nogil:
        for i in range(k):
            acc = y[i]
            for j in range(i):
                acc -= r[j, i] * y[j]
            y[i] = acc / r[i, i]
    return np.asarray(y)
