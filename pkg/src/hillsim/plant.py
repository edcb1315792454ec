"""Linearized micro-quadcopter about hover.

Four decoupled subsystems (vertical, yaw, lateral, longitudinal) driven by a
force/moment deviation command. The simulation truth model stacks them into
one 12-state vector ``x y z u v w phi theta psi p q r`` and advances it with
fixed-step RK4; every subsystem matrix is nilpotent, so RK4 reproduces the
exact flow for piecewise-constant commands.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from . import kernels as K
from .cw import LinearSystem
from .errors import DomainError, InputError, StepSizeError

MAX_STEP = 1.0 / 100.0

PWM_MAX = 65535
RPM_PER_PWM = 0.2685
RPM_AT_ZERO_PWM = 4070.3


@dataclass(frozen=True)
class DroneParams:
    """Crazyflie 2.1 defaults."""

    mass: float = 0.027
    Ixx: float = 1.4e-5
    Iyy: float = 1.4e-5
    Izz: float = 2.17e-5
    g: float = 9.81

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise InputError(f"{f.name} must be > 0, got {v}")

    @property
    def hover_thrust(self) -> float:
        return self.mass * self.g


class DroneState(NamedTuple):
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    u: float = 0.0
    v: float = 0.0
    w: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0

    @classmethod
    def from_array(cls, a) -> "DroneState":
        return cls(*(float(v) for v in np.asarray(a, dtype=float).reshape(12)))

    @property
    def position(self) -> np.ndarray:
        return np.array(self[0:3])

    @property
    def velocity(self) -> np.ndarray:
        return np.array(self[3:6])

    @property
    def attitude(self) -> np.ndarray:
        return np.array(self[6:9])

    @property
    def rates(self) -> np.ndarray:
        return np.array(self[9:12])


class PlantCommand(NamedTuple):
    dFz: float = 0.0
    Mx: float = 0.0
    My: float = 0.0
    Mz: float = 0.0


class Subsystems(NamedTuple):
    vertical: LinearSystem  # [dw, dz], input dFz
    yaw: LinearSystem  # [dr, dpsi], input dMz
    lateral: LinearSystem  # [dp, dphi, dv, dy], input dMx
    longitudinal: LinearSystem  # [dq, dtheta, du, dx], input dMy


def _frozen(A, B) -> LinearSystem:
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float).reshape(-1, 1)
    A.flags.writeable = False
    B.flags.writeable = False
    return LinearSystem(A, B)


def build_subsystems(params: DroneParams = DroneParams()) -> Subsystems:
    g = params.g
    chain2 = [[0, 0], [1, 0]]
    return Subsystems(
        vertical=_frozen(chain2, [1 / params.mass, 0]),
        yaw=_frozen(chain2, [1 / params.Izz, 0]),
        lateral=_frozen(
            [[0, 0, 0, 0], [1, 0, 0, 0], [0, -g, 0, 0], [0, 0, 1, 0]], [1 / params.Ixx, 0, 0, 0]
        ),
        longitudinal=_frozen(
            [[0, 0, 0, 0], [1, 0, 0, 0], [0, g, 0, 0], [0, 0, 1, 0]], [1 / params.Iyy, 0, 0, 0]
        ),
    )


def plant_derivative(s, cmd, params: DroneParams = DroneParams()) -> np.ndarray:
    return K.plant_derivative(
        np.asarray(s, dtype=float), np.asarray(cmd, dtype=float),
        params.mass, params.Ixx, params.Iyy, params.Izz, params.g,
    )


def step_plant(s, cmd, dt: float, params: DroneParams = DroneParams()) -> DroneState:
    """Advance one RK4 step of length ``dt`` (0 < dt <= 0.01 s) under a held command."""
    if not 0 < dt <= MAX_STEP:
        raise StepSizeError(f"plant step must satisfy 0 < dt <= {MAX_STEP}, got {dt}")
    arr = np.asarray(s, dtype=float).reshape(12)
    c = np.asarray(cmd, dtype=float).reshape(4)
    if not (np.all(np.isfinite(arr)) and np.all(np.isfinite(c))):
        raise InputError("plant state and command must be finite")
    out = K.plant_rk4(arr, c, float(dt), params.mass, params.Ixx, params.Iyy, params.Izz, params.g)
    return DroneState.from_array(out)


def pwm_to_rpm(pwm):
    """Motor speed from a 16-bit PWM duty value."""
    p = np.asarray(pwm, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > PWM_MAX):
        raise DomainError(f"PWM must lie in [0, {PWM_MAX}]")
    out = RPM_PER_PWM * p + RPM_AT_ZERO_PWM
    return float(out) if out.ndim == 0 else out


def rpm_to_pwm(rpm):
    r = np.asarray(rpm, dtype=float)
    lo, hi = RPM_AT_ZERO_PWM, RPM_PER_PWM * PWM_MAX + RPM_AT_ZERO_PWM
    if np.any(~np.isfinite(r)) or np.any(r < lo) or np.any(r > hi):
        raise DomainError(f"RPM must lie in [{lo}, {hi}]")
    # clip absorbs the last-ulp overshoot at the interval ends
    out = np.clip((r - RPM_AT_ZERO_PWM) / RPM_PER_PWM, 0.0, PWM_MAX)
    return float(out) if out.ndim == 0 else out
