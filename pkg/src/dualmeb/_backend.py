"""Kernel backend selection.

The compiled extension is preferred; the numpy twin is used when the
extension is missing or ``DUALMEB_PURE_PYTHON`` is set to a non-empty value
other than ``0``.
"""
import os
from contextlib import contextmanager

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_FORCE_PY = os.environ.get("DUALMEB_PURE_PYTHON", "") not in ("", "0")

kernels = _kernels_py if (_compiled is None or _FORCE_PY) else _compiled


def available():
    """Names of the backends importable in this environment."""
    return ["compiled", "python"] if _compiled is not None else ["python"]


def current():
    return kernels.BACKEND


def set_backend(name):
    """Switch the active kernel backend (``"compiled"`` or ``"python"``)."""
    global kernels
    if name == "python":
        kernels = _kernels_py
    elif name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        kernels = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


@contextmanager
def using(name):
    previous = current()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
