"""Rigid formation shape, per-slave formation error, and the weighted error norm."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose, relative_pose, wrap_angle


@dataclass(frozen=True)
class ErrorVec:
    """Formation error of one slave in the master's body frame.

    ex, ey in meters; etheta in radians, wrapped to (-pi, pi].
    """

    ex: float
    ey: float
    etheta: float

    def __post_init__(self):
        if not (math.isfinite(self.ex) and math.isfinite(self.ey)):
            raise ValueError("error components must be finite")
        object.__setattr__(self, "etheta", wrap_angle(self.etheta))


@dataclass(frozen=True)
class WeightMatrix:
    """Diagonal weights on (ex, ey, etheta); nonnegative, not all zero."""

    wx: float = 1.0
    wy: float = 1.0
    wtheta: float = 1.0

    def __post_init__(self):
        entries = (self.wx, self.wy, self.wtheta)
        if not all(math.isfinite(w) and w >= 0.0 for w in entries):
            raise ValueError("weights must be finite and >= 0")
        if not any(w > 0.0 for w in entries):
            raise ValueError("at least one weight must be > 0")


@dataclass(frozen=True)
class FormationSpec:
    """Desired relative pose of each slave, expressed in the master body frame.

    Slave ids are 1-based: desired[0] belongs to slave 1.
    """

    desired: tuple[Pose, ...]

    def __post_init__(self):
        if len(self.desired) == 0:
            raise ValueError("formation must have at least one slave")
        object.__setattr__(self, "desired", tuple(self.desired))

    @property
    def n_slaves(self) -> int:
        return len(self.desired)


def square_formation(side: float) -> FormationSpec:
    """Square formation with the master at one corner.

    Convention: master forward is +x, master left is +y; the three slaves sit
    at (side, 0), (0, side) and (side, side) in the master frame, all facing
    the master's direction (relative heading 0). The corner-to-index mapping
    is a documented convention; the shape itself is symmetric.
    """
    if not (side > 0.0) or not math.isfinite(side):
        raise ValueError(f"side must be > 0, got {side!r}")
    return FormationSpec(
        (
            Pose(side, 0.0, 0.0),
            Pose(0.0, side, 0.0),
            Pose(side, side, 0.0),
        )
    )


def formation_error(master: Pose, slave: Pose, desired: Pose) -> ErrorVec:
    """Deviation of the slave's actual relative pose from the desired one.

    Expressed in the master's body frame, so the result is invariant under a
    rigid transform applied to both robots.
    """
    r = relative_pose(master, slave)
    return ErrorVec(r.x - desired.x, r.y - desired.y, r.theta - desired.theta)


def weighted_error_norm(e: ErrorVec, weights: WeightMatrix) -> float:
    """Squared weighted norm wx*ex^2 + wy*ey^2 + wtheta*etheta^2 (radians)."""
    return (
        weights.wx * e.ex * e.ex
        + weights.wy * e.ey * e.ey
        + weights.wtheta * e.etheta * e.etheta
    )
