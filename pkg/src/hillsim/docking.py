"""Thrust policies closing the loop around the discrete CW model.

A policy is anything callable on a 6-wide Hill state that returns three
thrust components and carries a ``thrust_cap`` attribute. The runner holds
each command for one step (zero-order hold), so propagation uses the exact
discrete transition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

import numpy as np

from . import kernels as K
from .cw import OrbitalContext, TransitionMode, discrete_transition
from .errors import InputError, PolicyError, SchemaError
from .trajectory import FRAMES, SampledTrajectory

RECORD_SCHEMA_VERSION = 1


class ThrustPolicy(Protocol):
    thrust_cap: float

    def __call__(self, state: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class ZeroPolicy:
    thrust_cap: float = 1.0

    def __call__(self, state):
        return np.zeros(3)


@dataclass(frozen=True)
class PDDockingPolicy:
    """``u = -m (kp * position + kd * velocity)``; critically damped at the defaults."""

    kp: float = 1.0  # 1/s^2
    kd: float = 2.0  # 1/s
    mass: float = 1.0  # kg
    thrust_cap: float = 100.0  # N

    def __call__(self, state):
        s = np.asarray(state, dtype=float)
        return -self.mass * (self.kp * s[:3] + self.kd * s[3:])


@dataclass(frozen=True)
class DockingConfig:
    horizon: float = 10.0  # s
    dt: float = 0.1  # s
    success_radius: float = 0.5  # m
    v_max: float = 0.5  # m/s, initial-velocity safety limit
    v_slope: Optional[float] = None  # 1/s; limit becomes v_max + v_slope * distance
    r_min: float = 50.0  # m, sampling shell
    r_max: float = 150.0  # m
    velocity_range: float = 1.0  # m/s, half-width of the base velocity box
    seed: int = 0

    def __post_init__(self):
        for name in ("horizon", "dt", "success_radius", "v_max", "velocity_range"):
            v = getattr(self, name)
            if not v > 0:
                raise InputError(f"{name} must be > 0, got {v}")
        if self.v_slope is not None and self.v_slope < 0:
            raise InputError(f"v_slope must be >= 0, got {self.v_slope}")
        if not 0 <= self.r_min <= self.r_max:
            raise InputError(f"need 0 <= r_min <= r_max, got {self.r_min}, {self.r_max}")

    @property
    def steps(self) -> int:
        k = int(round(self.horizon / self.dt))
        if k < 1 or abs(k * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise InputError(f"horizon {self.horizon} s is not a whole number of {self.dt} s steps")
        return k

    def speed_limit(self, distance: float) -> float:
        if self.v_slope is None:
            return self.v_max
        return self.v_max + self.v_slope * distance


@dataclass(frozen=True, eq=False)
class Episode:
    trajectory: SampledTrajectory
    thrusts: np.ndarray  # (steps, 3), after clamping
    dt: float
    success_radius: float

    @property
    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.trajectory.positions, axis=1)

    @property
    def docked(self) -> bool:
        return bool(np.any(self.distances < self.success_radius))

    @property
    def time_to_dock(self) -> Optional[float]:
        hit = np.flatnonzero(self.distances < self.success_radius)
        return float(self.trajectory.times[hit[0]]) if hit.size else None

    @property
    def fuel(self) -> float:
        """Sum of |u| dt."""
        return float(np.sum(np.linalg.norm(self.thrusts, axis=1)) * self.dt)

    def summary(self) -> dict:
        return {
            "success": self.docked,
            "time_to_dock": self.time_to_dock,
            "fuel": self.fuel,
            "final_distance": float(self.distances[-1]),
            "steps": int(self.thrusts.shape[0]),
            "dt": self.dt,
        }


def _sample_shell(rng: np.random.Generator, r_min: float, r_max: float) -> np.ndarray:
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    r = np.cbrt(rng.uniform(r_min**3, r_max**3))
    return r * direction


def safe_random_initial_state(cfg: DockingConfig, ctx: OrbitalContext = OrbitalContext(),
                              rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Position uniform in the shell, velocity uniform in a box, rejected until under the limit.

    With no ``rng`` a fresh generator is seeded from ``cfg.seed``.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    pos = _sample_shell(rng, cfg.r_min, cfg.r_max)
    limit = cfg.speed_limit(float(np.linalg.norm(pos)))
    while True:
        vel = rng.uniform(-cfg.velocity_range, cfg.velocity_range, size=3)
        if np.linalg.norm(vel) <= limit:
            return np.concatenate([pos, vel])


def clamp_thrust(u, cap: float) -> np.ndarray:
    """Scale ``u`` back onto the ball of radius ``cap``, keeping its direction."""
    u = np.asarray(u, dtype=float).reshape(3)
    norm = float(np.linalg.norm(u))
    if norm > cap:
        return u * (cap / norm)
    return u


def run_closed_loop(policy, ic, ctx: OrbitalContext = OrbitalContext(),
                    cfg: DockingConfig = DockingConfig()) -> Episode:
    steps = cfg.steps
    tr = discrete_transition(ctx, cfg.dt, TransitionMode.ORACLE)
    Ak = np.ascontiguousarray(tr.A_k)
    Bk = np.ascontiguousarray(tr.B_k)
    s = np.asarray(ic, dtype=float).reshape(6).copy()
    states = np.empty((steps + 1, 6))
    thrusts = np.empty((steps, 3))
    states[0] = s
    cap = float(policy.thrust_cap)
    for k in range(steps):
        raw = np.asarray(policy(s.copy()), dtype=float).reshape(3)
        if not np.all(np.isfinite(raw)):
            raise PolicyError(k, raw.tolist())
        u = clamp_thrust(raw, cap)
        thrusts[k] = u
        s = K.discrete_step(Ak, Bk, s, u)
        states[k + 1] = s
    traj = SampledTrajectory(np.arange(steps + 1) * cfg.dt, states, "space")
    return Episode(traj, thrusts, cfg.dt, cfg.success_radius)


def trajectory_record(traj: SampledTrajectory) -> dict:
    return {
        "schema_version": RECORD_SCHEMA_VERSION,
        "frame": traj.frame,
        "times": [float(t) for t in traj.times],
        "states": [[float(v) for v in row] for row in traj.states],
    }


def save_trajectory_record(path, traj: SampledTrajectory) -> None:
    from .io import atomic_write_text

    atomic_write_text(path, json.dumps(trajectory_record(traj), indent=1) + "\n")


def parse_trajectory_record(doc) -> SampledTrajectory:
    if not isinstance(doc, dict):
        raise SchemaError("trajectory record must be a JSON object")
    for key in ("times", "states"):
        if key not in doc:
            raise SchemaError(f"trajectory record is missing field {key!r}")
    version = doc.get("schema_version", RECORD_SCHEMA_VERSION)
    if version != RECORD_SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}")
    frame = doc.get("frame", "space")
    if frame not in FRAMES:
        raise SchemaError(f"unknown frame {frame!r}")
    try:
        times = np.asarray(doc["times"], dtype=float).reshape(-1)
        states = np.asarray(doc["states"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"non-numeric trajectory data: {exc}") from None
    if states.ndim != 2 or states.shape[1] != 6:
        raise SchemaError(f"states must be rows of 6 values, got shape {states.shape}")
    if times.size != states.shape[0]:
        raise SchemaError(f"length mismatch: {times.size} times vs {states.shape[0]} states")
    if times.size == 0:
        raise SchemaError("trajectory record is empty")
    bad = np.flatnonzero(np.diff(times) <= 0)
    if bad.size:
        raise SchemaError(f"times not strictly increasing at index {bad[0] + 1}")
    if times[0] < 0:
        raise SchemaError("times must start at or after 0")
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(states))):
        raise SchemaError("trajectory record contains non-finite values")
    return SampledTrajectory(times, states, frame)


def load_trajectory_record(path) -> SampledTrajectory:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return parse_trajectory_record(doc)
