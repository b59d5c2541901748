"""Node positions, true time of flight and ground-truth TDoA."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from twr_tdoa.timebase import TICKS_PER_SECOND, check_range

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class Position:
    """Cartesian position in meters. ``z`` stays 0 for planar scenarios."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite position {self!r}")

    @classmethod
    def of(cls, coords) -> Position:
        coords = [float(v) for v in coords]
        if len(coords) not in (2, 3):
            raise ValueError("a position needs 2 or 3 coordinates")
        return cls(*coords)

    def as_array(self, dim: int = 2) -> np.ndarray:
        return np.array((self.x, self.y, self.z)[:dim], dtype=float)

    def distance(self, other: Position) -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


def tof_between(p: Position, q: Position) -> int:
    """Propagation time between two positions in ticks, round to nearest."""
    return math.floor(p.distance(q) * TICKS_PER_SECOND / SPEED_OF_LIGHT + 0.5)


def distance_of(ticks: int) -> float:
    """Meters travelled at the speed of light in ``ticks``."""
    return ticks * SPEED_OF_LIGHT / TICKS_PER_SECOND


@dataclass(frozen=True)
class GroundTruth:
    """Exact propagation times for one initiator/responder/listener triple.

    ``td`` is ``tof_at - tof_bt``: positive when the listener is closer to
    the responder. Each ToF is rounded independently, so ``|td|`` can exceed
    ``tof_ab`` by one tick for collinear geometry.
    """

    tof_ab: int
    tof_at: int
    tof_bt: int

    def __post_init__(self) -> None:
        for name in ("tof_ab", "tof_at", "tof_bt"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative")
            check_range(value)

    @property
    def td(self) -> int:
        return self.tof_at - self.tof_bt


def ground_truth(a: Position, b: Position, t: Position) -> GroundTruth:
    return GroundTruth(tof_between(a, b), tof_between(a, t), tof_between(b, t))


def infer_tof_at(td: int, tof_bt: int) -> int:
    """Listener-to-initiator ToF from a TDoA and a known listener-to-responder ToF."""
    return td + tof_bt
