"""Planar rigid-body poses and frame algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Normalize an angle to the half-open interval (-pi, pi]."""
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    return math.pi - (math.pi - theta) % TWO_PI


@dataclass(frozen=True)
class Pose:
    """Planar pose: position in meters, heading in radians.

    The heading is wrapped to (-pi, pi] on construction, so every pose
    carries the canonical representative of its orientation.
    """

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pose position must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))


IDENTITY = Pose(0.0, 0.0, 0.0)


def compose(a: Pose, b: Pose) -> Pose:
    """Pose of b expressed in a's parent frame (SE(2) composition)."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        a.theta + b.theta,
    )


def relative_pose(ref: Pose, target: Pose) -> Pose:
    """Pose of target expressed in ref's body frame.

    Left-inverse of compose: relative_pose(a, compose(a, r)) == r.
    """
    c, s = math.cos(ref.theta), math.sin(ref.theta)
    dx = target.x - ref.x
    dy = target.y - ref.y
    return Pose(c * dx + s * dy, -s * dx + c * dy, target.theta - ref.theta)
