"""Clohessy-Wiltshire relative motion in Hill's frame.

State ordering is ``[x, y, z, vx, vy, vz]`` with x radial, y along-track and
z out of plane; thrust is ``[Fx, Fy, Fz]`` in newtons.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.integrate import quad_vec

from . import kernels as K
from .errors import InputError
from .linalg import expm
from .rk45 import solve, solve_lti
from .trajectory import SampledTrajectory

EARTH_MEAN_MOTION = 0.001027  # rad/s


@dataclass(frozen=True)
class OrbitalContext:
    n: float = EARTH_MEAN_MOTION
    m: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.n) and self.n > 0):
            raise InputError(f"mean motion must be > 0, got {self.n}")
        if not (np.isfinite(self.m) and self.m > 0):
            raise InputError(f"deputy mass must be > 0, got {self.m}")

    @property
    def period(self) -> float:
        return 2 * np.pi / self.n


class HillState(NamedTuple):
    x: float
    y: float
    z: float
    vx: float
    vy: float
    vz: float


class ControlThrust(NamedTuple):
    Fx: float
    Fy: float
    Fz: float


@dataclass(frozen=True, eq=False)
class LinearSystem:
    A: np.ndarray
    B: np.ndarray


class TransitionMode(str, enum.Enum):
    PAPER_LITERAL = "paper-literal"
    ORACLE = "oracle"


@dataclass(frozen=True, eq=False)
class DiscreteTransition:
    A_k: np.ndarray
    B_k: np.ndarray
    dt: float
    mode: TransitionMode


def _as_state(s) -> np.ndarray:
    arr = np.asarray(s, dtype=float).reshape(-1)
    if arr.size != 6:
        raise InputError(f"Hill state needs 6 components, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InputError("Hill state must be finite")
    return arr


def build_continuous_system(ctx: OrbitalContext) -> LinearSystem:
    n, m = ctx.n, ctx.m
    A = np.zeros((6, 6))
    A[0:3, 3:6] = np.eye(3)
    A[3, 0] = 3 * n**2
    A[3, 4] = 2 * n
    A[4, 3] = -2 * n
    A[5, 2] = -(n**2)
    B = np.zeros((6, 3))
    B[3:6, :] = np.eye(3) / m
    A.flags.writeable = False
    B.flags.writeable = False
    return LinearSystem(A, B)


def cw_derivative(s, u, ctx: OrbitalContext) -> np.ndarray:
    sys = build_continuous_system(ctx)
    return sys.A @ _as_state(s) + sys.B @ np.asarray(u, dtype=float).reshape(3)


def propagate_continuous(
    ic,
    thrust_fn: Optional[Callable[[float], Sequence[float]]] = None,
    ctx: OrbitalContext = OrbitalContext(),
    t_span=(0.0, None),
    rtol: float = 1e-9,
    atol: float = 1e-12,
    first_step: Optional[float] = None,
    t_eval=None,
) -> SampledTrajectory:
    """Adaptive RK45 solution with dense output.

    ``thrust_fn=None`` means zero thrust and runs the compiled linear kernel.
    The returned trajectory holds the accepted step points, or ``t_eval``
    when given; either way ``.at(t)`` evaluates the continuous extension.
    ``t_span[1]`` defaults to one orbital period.
    """
    y0 = _as_state(ic)
    t0 = float(t_span[0])
    t1 = ctx.period if t_span[1] is None else float(t_span[1])
    if t1 < t0:
        raise InputError(f"t_span must be increasing, got ({t0}, {t1})")
    if not (rtol > 0 and atol > 0):
        raise InputError("tolerances must be positive")
    h0 = ctx.period / 1e4 if first_step is None else first_step
    sys = build_continuous_system(ctx)
    if thrust_fn is None:
        sol = solve_lti(sys.A, np.zeros(6), y0, (t0, t1), rtol, atol, h0)
    else:
        A, B = np.array(sys.A), np.array(sys.B)

        def rhs(t, y):
            return A @ y + B @ np.asarray(thrust_fn(t), dtype=float).reshape(3)

        sol = solve(rhs, (t0, t1), y0, rtol, atol, h0)
    if t_eval is None:
        return SampledTrajectory(sol.ts, sol.ys, "space", sol)
    tq = np.asarray(t_eval, dtype=float)
    if tq.size and (tq.min() < t0 or tq.max() > t1):
        raise InputError("t_eval must lie inside t_span")
    return SampledTrajectory(tq, sol(tq), "space", sol)


def paper_literal_transition(n: float, m: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form ``A_k`` and the published ``B_k`` table (scaled by 1/m), entry for entry."""
    t = dt
    nt = n * t
    s, c = np.sin(nt), np.cos(nt)
    A_k = np.array(
        [
            [4 - 3 * c, 0, 0, s / n, 2 / n * (1 - c), 0],
            [6 * (s - nt), 1, 0, -2 / n * (1 - c), 1 / n * (4 * s - 3 * nt), 0],
            [0, 0, c, 0, 0, s / n],
            [3 * n * s, 0, 0, c, 2 * s, 0],
            [-6 * n * (1 - c), 0, 0, -2 * s, 4 * c - 3, 0],
            [0, 0, -n * s, 0, 0, c],
        ],
        dtype=float,
    )
    B_k = np.array(
        [
            [1 / n * (c - 1), 2 / n * (t + 1 / n * s), 0],
            [-2 / n * (t - 1 / n * s), 1 / n * (-4 / n * (c - 1) - (3 * n / 2) * t**2), 0],
            [0, 0, -1 / n**2 * (c - 1)],
            [1 / n * s, -2 / n * (c - 1), 0],
            [2 / n * (c - 1), 4 / n * (s - 3 * t), 0],
            [0, 0, 1 / n * s],
        ],
        dtype=float,
    )
    return A_k, B_k / m


def oracle_state_transition(n: float, dt: float) -> np.ndarray:
    """``exp(A dt)`` by scaling and squaring.

    Velocities are rescaled by 1/n first so every entry of the exponent is
    O(n dt); the similarity transform is undone afterwards. The exponential
    itself runs in extended precision because the along-track secular terms
    reach 1e4-1e5 and squaring would otherwise cost several digits.
    """
    A = np.array(build_continuous_system(OrbitalContext(n, 1.0)).A)
    d = np.array([1.0, 1.0, 1.0, 1 / n, 1 / n, 1 / n], dtype=np.longdouble)
    scaled = (A * d[:, None] / d[None, :]) * np.longdouble(dt)
    E = expm(scaled, dtype=np.longdouble)
    return (E / d[:, None] * d[None, :]).astype(float)


def _oracle_input_matrix(n: float, m: float, dt: float) -> np.ndarray:
    if dt == 0:
        return np.zeros((6, 3))
    B = np.array(build_continuous_system(OrbitalContext(n, m)).B)
    scale = max(1.0, dt * dt) / m
    integral, _ = quad_vec(
        lambda s: oracle_state_transition(n, s) @ B, 0.0, dt,
        epsabs=1e-15 * scale, epsrel=1e-13, limit=200,
    )
    return integral


@lru_cache(maxsize=256)
def _transition_cached(n: float, m: float, dt: float, mode: TransitionMode):
    if mode is TransitionMode.PAPER_LITERAL:
        A_k, B_k = paper_literal_transition(n, m, dt)
    else:
        A_k = oracle_state_transition(n, dt)
        B_k = _oracle_input_matrix(n, m, dt)
    A_k.flags.writeable = False
    B_k.flags.writeable = False
    return A_k, B_k


def discrete_transition(
    ctx: OrbitalContext, dt: float, mode: TransitionMode | str = TransitionMode.ORACLE
) -> DiscreteTransition:
    dt = float(dt)
    if not dt >= 0:
        raise InputError(f"dt must be >= 0, got {dt}")
    mode = TransitionMode(mode)
    A_k, B_k = _transition_cached(ctx.n, ctx.m, dt, mode)
    return DiscreteTransition(A_k, B_k, dt, mode)


def propagate_discrete(
    ic,
    thrust_seq=None,
    ctx: OrbitalContext = OrbitalContext(),
    dt: float = 1.0,
    steps: int = 0,
    mode: TransitionMode | str = TransitionMode.ORACLE,
) -> SampledTrajectory:
    """Iterate the zero-order-hold map ``s[k+1] = A_k s[k] + B_k u[k]``."""
    if steps < 0:
        raise InputError(f"steps must be >= 0, got {steps}")
    if not dt > 0:
        raise InputError(f"dt must be > 0, got {dt}")
    x0 = _as_state(ic)
    if thrust_seq is None:
        U = np.zeros((steps, 3))
    else:
        U = np.asarray(thrust_seq, dtype=float).reshape(-1, 3)
        if U.shape[0] != steps:
            raise InputError(f"thrust sequence has {U.shape[0]} rows, expected {steps}")
    tr = discrete_transition(ctx, dt, mode)
    states = K.discrete_rollout(np.ascontiguousarray(tr.A_k), np.ascontiguousarray(tr.B_k), x0, U)
    return SampledTrajectory(np.arange(steps + 1) * dt, states, "space")


def nmt_initial_conditions(x0: float, vx0: float, z0: float = 0.0, vz0: float = 0.0,
                           ctx: OrbitalContext = OrbitalContext()) -> HillState:
    """Closed relative ellipse: ``y0 = 2 vx0 / n`` and ``vy0 = -2 n x0``; z is free."""
    return HillState(float(x0), 2 * vx0 / ctx.n, float(z0), float(vx0), -2 * ctx.n * x0, float(vz0))


def closure_residuals(s, ctx: OrbitalContext = OrbitalContext()) -> tuple[float, float]:
    x, y, _, vx, vy, _ = np.asarray(s, dtype=float).reshape(6)
    return float(vy + 2 * ctx.n * x), float(y - 2 * vx / ctx.n)


def closed_form_state(ic, t, n: float) -> np.ndarray:
    """Unforced CW solution written out component by component (independent of the matrix forms)."""
    x0, y0, z0, vx0, vy0, vz0 = np.asarray(ic, dtype=float).reshape(6)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s, c = np.sin(n * t), np.cos(n * t)
    x = 4 * x0 + 2 * vy0 / n + (vx0 / n) * s - (3 * x0 + 2 * vy0 / n) * c
    y = y0 - 2 * vx0 / n - 3 * (2 * n * x0 + vy0) * t + 2 * (3 * x0 + 2 * vy0 / n) * s + (2 * vx0 / n) * c
    z = z0 * c + (vz0 / n) * s
    vx = vx0 * c + (3 * n * x0 + 2 * vy0) * s
    vy = -3 * (2 * n * x0 + vy0) + 2 * (3 * n * x0 + 2 * vy0) * c - 2 * vx0 * s
    vz = -z0 * n * s + vz0 * c
    return np.column_stack([x, y, z, vx, vy, vz])


def bk_disagreements(ctx: OrbitalContext, dt: float, threshold: float = 1e-6):
    """Entries where the published ``B_k`` and the quadrature oracle differ by more than ``threshold``."""
    lit = discrete_transition(ctx, dt, TransitionMode.PAPER_LITERAL).B_k
    ora = discrete_transition(ctx, dt, TransitionMode.ORACLE).B_k
    rows = []
    for i in range(6):
        for j in range(3):
            diff = abs(lit[i, j] - ora[i, j])
            if diff > threshold:
                rows.append((i, j, float(lit[i, j]), float(ora[i, j]), float(diff)))
    return rows


def bk_validation_report(ctx: OrbitalContext, dt: float, threshold: float = 1e-6) -> str:
    lit = discrete_transition(ctx, dt, TransitionMode.PAPER_LITERAL).B_k
    ora = discrete_transition(ctx, dt, TransitionMode.ORACLE).B_k
    bad = bk_disagreements(ctx, dt, threshold)
    lines = [
        "B_k validation: published table vs quadrature of exp(A s) B",
        f"n = {ctx.n!r} rad/s, m = {ctx.m!r} kg, dt = {dt!r} s, n*dt = {ctx.n * dt!r}",
        f"threshold = {threshold!r}",
        "",
        f"{'row':>3} {'col':>3} {'published':>24} {'oracle':>24} {'abs diff':>12}",
    ]
    for i in range(6):
        for j in range(3):
            flag = " *" if abs(lit[i, j] - ora[i, j]) > threshold else ""
            lines.append(
                f"{i:>3} {j:>3} {lit[i, j]:>24.15e} {ora[i, j]:>24.15e} "
                f"{abs(lit[i, j] - ora[i, j]):>12.3e}{flag}"
            )
    lines.append("")
    lines.append(f"{len(bad)} of 18 entries disagree beyond threshold")
    for i, j, a, b, d in bad:
        lines.append(f"  B_k[{i}][{j}]: published {a:.15e}, oracle {b:.15e}, diff {d:.3e}")
    return "\n".join(lines) + "\n"
