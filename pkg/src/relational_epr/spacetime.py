"""Minkowski point events and frame-dependent ordering (units with c = 1)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

SIMULTANEITY_TOL = 1e-9
MAX_SPEED = 1.0 - 1e-9


class Separation(enum.Enum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"


class Ordering(enum.Enum):
    FIRST_PRECEDES_SECOND = "first-precedes-second"
    SECOND_PRECEDES_FIRST = "second-precedes-first"
    SIMULTANEOUS = "simultaneous"


def _vec3(values, name: str) -> tuple:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class Event:
    t: float
    x: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        t = float(self.t)
        if not math.isfinite(t):
            raise ValueError("event time must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", _vec3(self.x, "event position"))


@dataclass(frozen=True)
class Frame:
    """Inertial frame moving with ``velocity`` relative to the lab."""

    velocity: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        v = _vec3(self.velocity, "frame velocity")
        if math.hypot(*v) > MAX_SPEED:
            raise ValueError(f"frame speed must be subluminal (|v| = {math.hypot(*v):.12g})")
        object.__setattr__(self, "velocity", v)

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.speed**2)


LAB = Frame()


def interval(e1: Event, e2: Event) -> float:
    """Squared interval Δt² − |Δx|² (signature +−−−)."""
    dt = e2.t - e1.t
    dx = np.subtract(e2.x, e1.x)
    return float(dt * dt - dx @ dx)


def classify(e1: Event, e2: Event, tol: float = SIMULTANEITY_TOL) -> Separation:
    if tol <= 0:
        raise ValueError("tol must be positive")
    s2 = interval(e1, e2)
    if s2 < -tol:
        return Separation.SPACELIKE
    if s2 > tol:
        return Separation.TIMELIKE
    return Separation.LIGHTLIKE


def boosted_time(frame: Frame, e: Event) -> float:
    return frame.gamma * (e.t - float(np.dot(frame.velocity, e.x)))


def order_in_frame(frame: Frame, e1: Event, e2: Event, tol: float = SIMULTANEITY_TOL) -> Ordering:
    if tol <= 0:
        raise ValueError("tol must be positive")
    dt = boosted_time(frame, e2) - boosted_time(frame, e1)
    if abs(dt) <= tol:
        return Ordering.SIMULTANEOUS
    return Ordering.FIRST_PRECEDES_SECOND if dt > 0 else Ordering.SECOND_PRECEDES_FIRST


def simultaneity_frame(e1: Event, e2: Event) -> Frame:
    """Frame boosted along the spatial displacement in which the two events coincide in time.

    Exists only for spacelike pairs: the required speed is |Δt| / |Δx|.
    """
    dx = np.subtract(e2.x, e1.x)
    dist2 = float(dx @ dx)
    if classify(e1, e2) is not Separation.SPACELIKE:
        raise ValueError("only spacelike-separated events have a frame of simultaneity")
    return Frame(tuple((e2.t - e1.t) / dist2 * dx))


def frame_along(e1: Event, e2: Event, speed: float) -> Frame:
    """Frame moving with signed ``speed`` along the direction from e1 to e2."""
    dx = np.subtract(e2.x, e1.x)
    norm = float(np.linalg.norm(dx))
    if norm == 0:
        raise ValueError("events share a spatial location")
    return Frame(tuple(speed * dx / norm))
