"""Time-stamped state sequences shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError

FRAMES = ("space", "lab")


@dataclass(frozen=True, eq=False)
class SampledTrajectory:
    """Samples of a 6-wide ``[x, y, z, vx, vy, vz]`` state.

    ``dense`` optionally maps an array of times to an ``(N, 6)`` array of
    states (continuous-extension of an integrator); without it, :meth:`at`
    interpolates linearly between samples.
    """

    times: np.ndarray
    states: np.ndarray
    frame: str = "space"
    dense: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        states = np.array(self.states, dtype=float).reshape(-1, 6)
        if times.size < 1:
            raise InputError("trajectory needs at least one sample")
        if times.size != states.shape[0]:
            raise InputError(
                f"times ({times.size}) and states ({states.shape[0]}) differ in length"
            )
        if times[0] < 0:
            raise InputError(f"first time must be >= 0, got {times[0]}")
        bad = np.flatnonzero(np.diff(times) <= 0)
        if bad.size:
            raise InputError(f"times not strictly increasing at index {bad[0] + 1}")
        if not np.all(np.isfinite(states)):
            raise InputError("trajectory states must be finite")
        if self.frame not in FRAMES:
            raise InputError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        times.flags.writeable = False
        states.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return self.times.size

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, :3]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, 3:]

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])

    def at(self, times) -> np.ndarray:
        """States at arbitrary ``times`` inside the sampled span."""
        tq = np.atleast_1d(np.asarray(times, dtype=float))
        if self.dense is not None:
            return self.dense(tq)
        return np.column_stack([np.interp(tq, self.times, self.states[:, i]) for i in range(6)])

    def resample(self, times) -> "SampledTrajectory":
        tq = np.atleast_1d(np.asarray(times, dtype=float))
        return SampledTrajectory(tq, self.at(tq), self.frame, self.dense)

    def same_samples(self, other: "SampledTrajectory") -> bool:
        """Bit-exact comparison of times, states and frame."""
        return (
            self.frame == other.frame
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.states, other.states)
        )


def blockwise_relative_error(actual, expected) -> float:
    """Worst of the position-block and velocity-block relative errors.

    Each block is normalised by its own largest reference magnitude so that
    metre-scale positions do not swamp millimetre-per-second velocities.
    A block whose reference is identically zero is compared absolutely.
    """
    a = np.asarray(actual, dtype=float).reshape(-1, 6)
    b = np.asarray(expected, dtype=float).reshape(-1, 6)
    worst = 0.0
    for cols in (slice(0, 3), slice(3, 6)):
        scale = np.max(np.abs(b[:, cols]))
        diff = np.max(np.abs(a[:, cols] - b[:, cols]))
        worst = max(worst, diff / scale if scale > 0 else diff)
    return float(worst)
