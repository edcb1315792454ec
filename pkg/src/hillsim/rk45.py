"""Dormand-Prince 5(4) integration with a quartic continuous extension.

Two entry points share one tableau: :func:`solve_lti` hands the autonomous
linear case ``y' = A y + c`` to a compiled kernel, and :func:`solve` steps an
arbitrary right-hand side ``f(t, y)`` in Python.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import IntegrationError

DEFAULT_MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class DenseSolution:
    """Accepted step points plus the stage slopes needed for dense output."""

    ts: np.ndarray
    ys: np.ndarray
    ks: np.ndarray

    def __call__(self, t) -> np.ndarray:
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        return K.dp45_dense_eval(self.ts, self.ys, self.ks, tq, K.DP_P)

    @property
    def n_steps(self) -> int:
        return self.ks.shape[0]


def _check(status: int, t_fail: float) -> None:
    if status == K.STATUS_UNDERFLOW:
        raise IntegrationError(t_fail)
    if status == K.STATUS_MAX_STEPS:
        raise IntegrationError(t_fail, "maximum step count exceeded")


def solve_lti(A, c, y0, t_span, rtol, atol, first_step, max_steps=DEFAULT_MAX_STEPS) -> DenseSolution:
    t0, t1 = map(float, t_span)
    y0 = np.asarray(y0, dtype=float)
    if t1 == t0:
        return DenseSolution(np.array([t0]), y0[None, :].copy(), np.empty((0, 7, y0.size)))
    ts, ys, ks, status, t_fail = K.dp45_lti(
        np.ascontiguousarray(A, dtype=float), np.asarray(c, dtype=float), y0,
        t0, t1, float(first_step), float(rtol), float(atol), int(max_steps),
        K.DP_A, K.DP_B5, K.DP_E,
    )
    _check(status, t_fail)
    return DenseSolution(ts, ys, ks)


def solve(fun, t_span, y0, rtol, atol, first_step, max_steps=DEFAULT_MAX_STEPS) -> DenseSolution:
    """Integrate ``y' = fun(t, y)``; ``fun`` may be any Python callable."""
    t0, t1 = map(float, t_span)
    y = np.asarray(y0, dtype=float).copy()
    dim = y.size
    if t1 == t0:
        return DenseSolution(np.array([t0]), y[None, :], np.empty((0, 7, dim)))
    eps = np.finfo(float).eps
    ts, ys, ks = [t0], [y.copy()], []
    t = t0
    h = min(float(first_step), t1 - t0)
    f = np.asarray(fun(t, y), dtype=float)
    k = np.empty((7, dim))
    steps = 0
    while t < t1:
        if steps >= max_steps:
            raise IntegrationError(t, "maximum step count exceeded")
        steps += 1
        if h < 16 * eps * max(abs(t), 1.0):
            raise IntegrationError(t)
        h = min(h, t1 - t)
        k[0] = f
        for s in range(1, 7):
            ytmp = y + h * (K.DP_A[s, :s] @ k[:s])
            k[s] = fun(t + K.DP_C[s] * h, ytmp)
        y_new = ytmp
        err = h * (K.DP_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if not np.isfinite(err_norm):
            raise IntegrationError(t, "non-finite derivative")
        if err_norm <= 1.0:
            t_next = t + h
            if t_next > t1 or t1 - t_next < 16 * eps * max(abs(t1), 1.0):
                t_next = t1
            ks.append(k.copy())
            ts.append(t_next)
            ys.append(y_new.copy())
            t, y, f = t_next, y_new, k[6].copy()
            fac = K.DP_MAX_FACTOR if err_norm == 0 else min(K.DP_MAX_FACTOR, K.DP_SAFETY * err_norm**-0.2)
            h *= fac
        else:
            h *= max(K.DP_MIN_FACTOR, K.DP_SAFETY * err_norm**-0.2)
    return DenseSolution(np.array(ts), np.array(ys), np.array(ks))
