"""Optional numba acceleration.

Kernels are written once in the numba-compatible subset of Python/numpy and
compiled with ``numba.njit`` unless ``HILLSIM_DISABLE_NUMBA`` is set to a
truthy value (or numba is not importable), in which case the very same
functions run as plain numpy code.
"""

from __future__ import annotations

import os

_FALSEY = {"", "0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("HILLSIM_DISABLE_NUMBA", "").strip().lower() in _FALSEY


try:
    if not _numba_requested():
        raise ImportError
    from numba import njit as _njit
except ImportError:
    _njit = None

USE_NUMBA = _njit is not None


def kernel(fn):
    """Compile ``fn`` with numba when enabled; the original stays on ``.py_func``."""
    if _njit is None:
        fn.py_func = fn
        return fn
    return _njit(cache=True)(fn)
