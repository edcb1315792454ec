"""Dense matrix exponential."""

from __future__ import annotations

import numpy as np


def expm(M, dtype=np.float64, theta: float = 0.5, degree: int = 30) -> np.ndarray:
    """``exp(M)`` by scaling and squaring around a truncated Taylor series.

    ``M`` is scaled by ``2**-s`` until its 1-norm is at most ``theta``; with
    ``theta=0.5`` the degree-30 remainder is below ``0.5**31 / 31!``, far
    under the working precision. Computation happens in ``dtype`` (pass
    ``np.longdouble`` for extra guard digits) and the result keeps that dtype.
    """
    X = np.asarray(M, dtype=dtype)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {X.shape}")
    norm = float(np.abs(X).sum(axis=0).max()) if X.size else 0.0
    squarings = int(np.ceil(np.log2(norm / theta))) if norm > theta else 0
    X = X / dtype(2) ** squarings
    eye = np.eye(X.shape[0], dtype=dtype)
    result = eye.copy()
    term = eye
    for k in range(1, degree + 1):
        term = term @ X / dtype(k)
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result
