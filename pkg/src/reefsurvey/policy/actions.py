"""Seven-way discretization of yaw and pitch changes.

Class c in 0..6 decodes to (3 - c) * delta degrees, so class 3 is the no-op,
class 0 the hardest positive change and class 6 the hardest negative one.
Positive yaw is clockwise viewed from above; positive pitch is upward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NUM_CLASSES = 7
DEFAULT_DELTA_YAW = 5.0
DEFAULT_DELTA_PITCH = 5.0


@dataclass(frozen=True)
class ActionClass:
    """A pair of 7-way class indices with their step sizes in degrees."""

    c_yaw: int
    c_pitch: int
    delta_yaw: float = DEFAULT_DELTA_YAW
    delta_pitch: float = DEFAULT_DELTA_PITCH

    def __post_init__(self):
        for name, c in (("c_yaw", self.c_yaw), ("c_pitch", self.c_pitch)):
            if not (0 <= c < NUM_CLASSES):
                raise ValueError(f"{name}={c} outside 0..{NUM_CLASSES - 1}")

    @property
    def yaw_change(self) -> float:
        return decode_action(self.c_yaw, self.delta_yaw)

    @property
    def pitch_change(self) -> float:
        return decode_action(self.c_pitch, self.delta_pitch)


def decode_action(c: int, delta: float) -> float:
    """Signed degree change for class c: (3 - c) * delta."""
    if not (0 <= c < NUM_CLASSES):
        raise ValueError(f"class {c} outside 0..{NUM_CLASSES - 1}")
    return (3 - c) * delta


def smooth_label(c: int) -> np.ndarray:
    """Smoothed target: 0.8 on the class, 0.1 on each existing neighbor.

    At the edges the missing neighbor's 0.1 folds back onto the class, so
    the result always sums to 1.
    """
    if not (0 <= c < NUM_CLASSES):
        raise ValueError(f"class {c} outside 0..{NUM_CLASSES - 1}")
    dist = np.zeros(NUM_CLASSES, dtype=np.float64)
    dist[c] = 0.8
    for neighbor in (c - 1, c + 1):
        if 0 <= neighbor < NUM_CLASSES:
            dist[neighbor] += 0.1
        else:
            dist[c] += 0.1
    return dist
