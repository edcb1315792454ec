"""Mellinger-style PID position loop over a PD attitude loop.

The position loop asks for a world-frame force
``F = m g z + m (Kp e + Ki int(e) + Kd (v_ref - v))`` and tilts the thrust
axis toward it; collective thrust is ``F`` projected on the current body z
axis. Tilt targets live in the plant's world-aligned small-angle frame
(``u' = g theta``, ``v' = -g phi``), while yaw tracks its own reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kernels as K
from .errors import InputError
from .plant import DroneParams, PlantCommand


def _triple(v) -> tuple[float, float, float]:
    arr = np.broadcast_to(np.asarray(v, dtype=float), (3,))
    return tuple(float(x) for x in arr)


@dataclass(frozen=True)
class GainSet:
    kp: tuple = (36.0, 36.0, 36.0)
    ki: tuple = (2.0, 2.0, 2.0)
    kd: tuple = (12.0, 12.0, 12.0)
    kp_att: tuple = (6e-3, 6e-3, 6e-3)
    kd_att: tuple = (5e-4, 5e-4, 5e-4)
    i_clamp: float = 0.5  # m s
    thrust_cap: float = 0.6  # N
    moment_cap: float = 5e-3  # N m
    velocity_feedforward: bool = True

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "kp_att", "kd_att"):
            vals = _triple(getattr(self, name))
            if any(not np.isfinite(v) or v < 0 for v in vals):
                raise InputError(f"{name} gains must be finite and >= 0, got {vals}")
            object.__setattr__(self, name, vals)
        for name in ("i_clamp", "thrust_cap", "moment_cap"):
            v = float(getattr(self, name))
            if not (np.isfinite(v) and v > 0):
                raise InputError(f"{name} must be > 0, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "velocity_feedforward", bool(self.velocity_feedforward))

    @classmethod
    def zero(cls, **kw) -> "GainSet":
        """All loop gains zero: pure gravity feedforward."""
        z = (0.0, 0.0, 0.0)
        return cls(kp=z, ki=z, kd=z, kp_att=z, kd_att=z, **kw)

    def arrays(self):
        return tuple(np.array(getattr(self, n)) for n in ("kp", "ki", "kd", "kp_att", "kd_att"))


@dataclass(frozen=True, eq=False)
class ControllerState:
    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_error: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __eq__(self, other):
        return (
            isinstance(other, ControllerState)
            and np.array_equal(self.integral, other.integral)
            and np.array_equal(self.prev_error, other.prev_error)
        )


def reset(state: Optional[ControllerState] = None) -> ControllerState:
    return ControllerState()


class PositionOutput(NamedTuple):
    force: np.ndarray  # N, world frame
    attitude: np.ndarray  # rad, (phi, theta, psi) targets
    thrust: float  # N, collective, saturated
    state: ControllerState


def position_control(
    s,
    target,
    yaw_ref: float,
    gains: GainSet,
    dt: float,
    cstate: Optional[ControllerState] = None,
    vel_ref=None,
    params: DroneParams = DroneParams(),
) -> PositionOutput:
    if not dt > 0:
        raise InputError(f"dt must be > 0, got {dt}")
    cstate = ControllerState() if cstate is None else cstate
    arr = np.asarray(s, dtype=float).reshape(12)
    tgt = np.asarray(target, dtype=float).reshape(3)
    vref = np.zeros(3) if vel_ref is None else np.asarray(vel_ref, dtype=float).reshape(3)
    kp, ki, kd, _, _ = gains.arrays()
    force, att, thrust, integ = K.position_law(
        arr, tgt, vref, cstate.integral, float(yaw_ref), kp, ki, kd,
        gains.i_clamp, gains.thrust_cap, params.mass, params.g, float(dt),
    )
    return PositionOutput(force, att, float(thrust), ControllerState(integ, tgt - arr[:3]))


def attitude_control(s, attitude_des, gains: GainSet) -> np.ndarray:
    """Moments ``(Mx, My, Mz)`` from a PD law on wrapped attitude error, saturated per axis."""
    arr = np.asarray(s, dtype=float).reshape(12)
    _, _, _, kp_att, kd_att = gains.arrays()
    return K.attitude_law(arr, np.asarray(attitude_des, dtype=float).reshape(3), kp_att, kd_att, gains.moment_cap)


def compute_command(thrust: float, moments, params: DroneParams = DroneParams()) -> PlantCommand:
    """Deviation command about hover from a collective thrust and moments."""
    mx, my, mz = (float(v) for v in moments)
    return PlantCommand(float(thrust) - params.mass * params.g, mx, my, mz)
