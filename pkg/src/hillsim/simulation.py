"""Closed-loop waypoint tracking for one surrogate drone or an independent swarm."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels as K
from .control import GainSet
from .errors import AssignmentError, BoundsError, ConfigError, InputError
from .plant import DroneParams, MAX_STEP
from .scaling import LabVolume, WaypointList, check_bounds

INITIAL_YAW = np.pi / 2


@dataclass(frozen=True)
class SimConfig:
    control_rate: float = 48.0
    physics_rate: float = 240.0
    duration: Optional[float] = None  # s; None = one control tick per waypoint
    yaw_ref: float = INITIAL_YAW
    initial_attitude: tuple = (0.0, 0.0, INITIAL_YAW)

    def __post_init__(self):
        if not (self.control_rate > 0 and self.physics_rate > 0):
            raise ConfigError("rates must be > 0")
        ratio = self.physics_rate / self.control_rate
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError(
                f"physics rate {self.physics_rate} Hz must be an integer multiple of "
                f"control rate {self.control_rate} Hz"
            )
        if 1.0 / self.physics_rate > MAX_STEP:
            raise ConfigError(f"physics rate must be >= {1 / MAX_STEP} Hz")
        if self.duration is not None and not self.duration > 0:
            raise ConfigError(f"duration must be > 0, got {self.duration}")

    @property
    def substeps(self) -> int:
        return int(round(self.physics_rate / self.control_rate))


@dataclass(frozen=True, eq=False)
class SimLog:
    """One row per control tick: the state *before* the command is applied."""

    times: np.ndarray
    waypoints: np.ndarray  # (N, 3)
    states: np.ndarray  # (N, 12)
    commands: np.ndarray  # (N, 4): dFz, Mx, My, Mz
    thrust: np.ndarray  # (N,) collective thrust, N

    def __len__(self) -> int:
        return self.times.size

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, :3]

    def same_as(self, other: "SimLog") -> bool:
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("times", "waypoints", "states", "commands", "thrust")
        )


@dataclass(frozen=True)
class TrackingMetrics:
    rms: tuple
    max: tuple
    final_error: float

    def as_dict(self) -> dict:
        return {
            "rms_x": self.rms[0], "rms_y": self.rms[1], "rms_z": self.rms[2],
            "max_x": self.max[0], "max_y": self.max[1], "max_z": self.max[2],
            "final_error": self.final_error,
        }


@dataclass(frozen=True)
class SwarmMember:
    uri: str
    waypoints: WaypointList
    gains: GainSet = field(default_factory=GainSet)
    params: DroneParams = field(default_factory=DroneParams)


def run_tracking(
    wps: WaypointList,
    params: DroneParams = DroneParams(),
    gains: GainSet = GainSet(),
    cfg: SimConfig = SimConfig(),
    vol: Optional[LabVolume] = LabVolume(),
    force_bounds: bool = False,
    initial_state=None,
) -> SimLog:
    """Fly the waypoint list; the drone starts at rest on the first waypoint.

    Pass ``vol=None`` (or ``force_bounds=True``) to skip the flight-volume check.
    """
    if len(wps) == 0:
        raise InputError("waypoint list is empty")
    if abs(wps.frequency - cfg.control_rate) > 1e-9 * cfg.control_rate:
        raise ConfigError(
            f"waypoint frequency {wps.frequency} Hz does not match control rate {cfg.control_rate} Hz"
        )
    if vol is not None and not force_bounds:
        bad = check_bounds(wps, vol)
        if bad:
            raise BoundsError(bad)
    n = len(wps) if cfg.duration is None else int(round(cfg.control_rate * cfg.duration))
    if n < 1 or n > len(wps):
        raise InputError(f"need {n} waypoints for the configured duration, have {len(wps)}")
    pts = np.ascontiguousarray(wps.positions[:n])
    if initial_state is None:
        s0 = np.zeros(12)
        s0[:3] = pts[0]
        s0[6:9] = cfg.initial_attitude
    else:
        s0 = np.asarray(initial_state, dtype=float).reshape(12).copy()
    kp, ki, kd, kp_att, kd_att = gains.arrays()
    states, cmds, thrust = K.tracking_loop(
        s0, pts, float(cfg.control_rate), cfg.substeps, float(cfg.yaw_ref),
        gains.velocity_feedforward, kp, ki, kd, kp_att, kd_att,
        gains.i_clamp, gains.thrust_cap, gains.moment_cap,
        params.mass, params.Ixx, params.Iyy, params.Izz, params.g,
    )
    times = np.arange(n) / cfg.control_rate
    return SimLog(times, pts.copy(), states, cmds, thrust)


def compute_metrics(log: SimLog) -> TrackingMetrics:
    if len(log) == 0:
        raise InputError("cannot compute metrics of an empty log")
    err = log.waypoints - log.positions
    rms = np.sqrt(np.mean(err**2, axis=0))
    mx = np.max(np.abs(err), axis=0)
    return TrackingMetrics(
        tuple(float(v) for v in rms), tuple(float(v) for v in mx), float(np.linalg.norm(err[-1]))
    )


def run_swarm(members: Sequence[SwarmMember], cfg: SimConfig = SimConfig(),
              vol: Optional[LabVolume] = LabVolume(), force_bounds: bool = False,
              workers: int = 1) -> dict[str, SimLog]:
    """Simulate each member on its own (no interaction); result ordered by URI."""
    seen = set()
    for m in members:
        if m.uri in seen:
            raise AssignmentError(f"duplicate URI {m.uri!r}")
        seen.add(m.uri)

    def one(m: SwarmMember) -> SimLog:
        return run_tracking(m.waypoints, m.params, m.gains, cfg, vol, force_bounds)

    ordered = sorted(members, key=lambda m: m.uri)
    if workers > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            logs = list(pool.map(one, ordered))
    else:
        logs = [one(m) for m in ordered]
    return {m.uri: log for m, log in zip(ordered, logs)}
