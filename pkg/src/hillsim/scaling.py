"""Space-to-lab conversion and fixed-rate waypoint generation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import CoverageError, InputError
from .trajectory import SampledTrajectory

DEFAULT_DISTANCE_FACTOR = 4000.0


@dataclass(frozen=True)
class ScaleConfig:
    """``time_factor = source_span / sim_duration`` compresses e.g. three orbits into 10 s."""

    sim_duration: float
    source_span: float
    distance_factor: float = DEFAULT_DISTANCE_FACTOR

    def __post_init__(self):
        for name in ("sim_duration", "source_span", "distance_factor"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InputError(f"{name} must be > 0, got {v}")

    @property
    def time_factor(self) -> float:
        return self.source_span / self.sim_duration


@dataclass(frozen=True)
class LabVolume:
    x_extent: float = 4.0
    y_extent: float = 3.0
    z_extent: float = 2.5
    z_offset: float = 1.0

    def __post_init__(self):
        for name in ("x_extent", "y_extent", "z_extent"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InputError(f"{name} must be > 0, got {v}")
        if not 0 < self.z_offset < self.z_extent:
            raise InputError(f"z_offset must lie in (0, {self.z_extent}), got {self.z_offset}")


@dataclass(frozen=True, eq=False)
class WaypointList:
    frequency: float
    positions: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.frequency) and self.frequency > 0):
            raise InputError(f"frequency must be > 0, got {self.frequency}")
        pos = np.array(self.positions, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pos)):
            raise InputError("waypoint positions must be finite")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) / self.frequency

    def same_as(self, other: "WaypointList") -> bool:
        return self.frequency == other.frequency and np.array_equal(self.positions, other.positions)


class BoundsViolation(NamedTuple):
    index: int
    axis: str
    value: float


def scale_to_lab(traj: SampledTrajectory, cfg: ScaleConfig, vol: LabVolume = LabVolume()) -> SampledTrajectory:
    if traj.frame != "space":
        raise InputError(f"scale_to_lab expects a space-frame trajectory, got {traj.frame!r}")
    d, tf = cfg.distance_factor, cfg.time_factor
    states = np.empty_like(traj.states)
    states[:, :3] = traj.positions / d
    states[:, 2] += vol.z_offset
    states[:, 3:] = traj.velocities * (tf / d)
    return SampledTrajectory(traj.times / tf, states, "lab")


def unscale_to_space(traj: SampledTrajectory, cfg: ScaleConfig, vol: LabVolume = LabVolume()) -> SampledTrajectory:
    """Inverse of :func:`scale_to_lab`."""
    if traj.frame != "lab":
        raise InputError(f"unscale_to_space expects a lab-frame trajectory, got {traj.frame!r}")
    d, tf = cfg.distance_factor, cfg.time_factor
    states = np.empty_like(traj.states)
    states[:, :3] = traj.positions
    states[:, 2] -= vol.z_offset
    states[:, :3] *= d
    states[:, 3:] = traj.velocities * (d / tf)
    return SampledTrajectory(traj.times * tf, states, "space")


def waypoint_count(frequency: float, duration: float) -> int:
    return int(round(frequency * duration))


def resample_waypoints(traj: SampledTrajectory, frequency: float, duration: float) -> WaypointList:
    """``round(frequency * duration)`` positions at ``k / frequency``, linearly interpolated."""
    if not (frequency > 0 and duration > 0):
        raise InputError("frequency and duration must be > 0")
    count = waypoint_count(frequency, duration)
    if count < 1:
        raise InputError(f"frequency * duration rounds to {count} waypoints")
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    slack = 1e-9 * max(1.0, abs(duration))
    if t0 > slack or duration > (t1 - t0) + slack:
        raise CoverageError(
            f"trajectory covers [{t0}, {t1}] s but [0, {duration}] s was requested"
        )
    tq = np.arange(count) / frequency
    tq = np.clip(tq, t0, t1)
    pos = np.column_stack([np.interp(tq, traj.times, traj.positions[:, i]) for i in range(3)])
    return WaypointList(float(frequency), pos)


def check_bounds(wps: WaypointList, vol: LabVolume = LabVolume()) -> list[BoundsViolation]:
    """Every waypoint outside ``|x| <= X/2, |y| <= Y/2, 0 <= z <= Z``; empty means ok."""
    p = wps.positions
    out = []
    for i in range(p.shape[0]):
        x, y, z = p[i]
        if abs(x) > vol.x_extent / 2:
            out.append(BoundsViolation(i, "x", float(x)))
        if abs(y) > vol.y_extent / 2:
            out.append(BoundsViolation(i, "y", float(y)))
        if not 0.0 <= z <= vol.z_extent:
            out.append(BoundsViolation(i, "z", float(z)))
    return out


def lab_pipeline(traj: SampledTrajectory, duration: float, frequency: float,
                 distance_factor: float = DEFAULT_DISTANCE_FACTOR,
                 vol: LabVolume = LabVolume(), source_span: Optional[float] = None) -> WaypointList:
    """Scale a space-frame trajectory to fill ``duration`` and resample it."""
    span = traj.span if source_span is None else source_span
    lab = scale_to_lab(traj, ScaleConfig(duration, span, distance_factor), vol)
    return resample_waypoints(lab, frequency, duration)
