"""Pure numpy twin of the compiled Givens kernels.

Same signatures and the same rotation sequence as ``_kernels.pyx``; used
when the extension is not built or when ``DUALMEB_PURE_PYTHON`` is set.
"""
import math

import numpy as np

BACKEND = "python"


def _givens(a, b):
    h = math.hypot(a, b)
    if h == 0.0:
        return 1.0, 0.0, 0.0
    return a / h, b / h, h


def _rot_cols(q, i, j, c, s):
    qi = q[:, i].copy()
    q[:, i] *= c
    q[:, i] += s * q[:, j]
    q[:, j] *= c
    q[:, j] -= s * qi


def _rot_rows(r, i, j, c0, c, s):
    if c0 >= r.shape[1]:
        return
    ri = r[i, c0:].copy()
    r[i, c0:] = c * ri + s * r[j, c0:]
    r[j, c0:] = c * r[j, c0:] - s * ri


def reduce_column(q, r, pos):
    n = r.shape[0]
    for i in range(n - 1, pos, -1):
        if r[i, pos] == 0.0:
            continue
        c, s, h = _givens(r[i - 1, pos], r[i, pos])
        r[i - 1, pos] = h
        r[i, pos] = 0.0
        _rot_rows(r, i - 1, i, max(i - 1, pos + 1), c, s)
        _rot_cols(q, i - 1, i, c, s)


def reduce_hessenberg(q, r, start, stop):
    for i in range(start, stop):
        if r[i + 1, i] == 0.0:
            continue
        c, s, h = _givens(r[i, i], r[i + 1, i])
        r[i, i] = h
        r[i + 1, i] = 0.0
        _rot_rows(r, i, i + 1, i + 1, c, s)
        _rot_cols(q, i, i + 1, c, s)


def reduce_vector(q, r, w):
    for i in range(w.shape[0] - 1, 0, -1):
        if w[i] == 0.0:
            continue
        c, s, h = _givens(w[i - 1], w[i])
        w[i - 1] = h
        w[i] = 0.0
        _rot_rows(r, i - 1, i, i - 1, c, s)
        _rot_cols(q, i - 1, i, c, s)
    return w[0]


def back_substitute(r, b, k):
    y = np.array(b[:k], dtype=np.float64)
    for j in range(k - 1, -1, -1):
        y[j] /= r[j, j]
        y[:j] -= y[j] * r[:j, j]
    return y


def forward_substitute_t(r, b, k):
    y = np.array(b[:k], dtype=np.float64)
    for i in range(k):
        y[i] = (y[i] - r[:i, i] @ y[:i]) / r[i, i]
    return y
