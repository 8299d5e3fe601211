"""Unicycle propagation under constant velocity commands, with optional actuation noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose

# Below this |omega * duration| the circular-arc form loses precision to
# cancellation and the second-order Taylor form of the arc displacement is used.
ARC_EPSILON = 1e-8

# Velocity magnitude floors keep the noise scale positive at standstill.
V_NOISE_FLOOR = 0.01
OMEGA_NOISE_FLOOR = 0.01


@dataclass(frozen=True)
class VelocityCommand:
    """Target velocity pair: linear v in m/s, angular omega in rad/s."""

    v: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.omega)):
            raise ValueError("velocity command must be finite")


ZERO_COMMAND = VelocityCommand(0.0, 0.0)


@dataclass(frozen=True)
class NoiseModel:
    """Actuation noise: per-channel Gaussian with variance rho * max(|value|, floor)."""

    rho: float
    enabled: bool = True

    def __post_init__(self):
        if not math.isfinite(self.rho) or self.rho < 0.0:
            raise ValueError("noise power coefficient rho must be finite and >= 0")


def unicycle_step(start: Pose, cmd: VelocityCommand, duration: float) -> Pose:
    """Propagate a unicycle for `duration` seconds under a constant command.

    Exact constant-twist integration: the heading advances by omega*duration
    and the position follows the circular arc of radius v/omega. Near
    omega = 0 the Taylor form of the arc displacement is used instead, which
    is continuous with the straight-line limit.
    """
    if not (duration > 0.0):
        raise ValueError(f"duration must be > 0, got {duration!r}")
    theta_t = cmd.omega * duration
    if abs(theta_t) < ARC_EPSILON:
        dxb = cmd.v * duration * (1.0 - theta_t * theta_t / 6.0)
        dyb = cmd.v * duration * (theta_t / 2.0)
    else:
        dxb = (cmd.v / cmd.omega) * math.sin(theta_t)
        dyb = (cmd.v / cmd.omega) * (1.0 - math.cos(theta_t))
    c, s = math.cos(start.theta), math.sin(start.theta)
    return Pose(
        start.x + c * dxb - s * dyb,
        start.y + s * dxb + c * dyb,
        start.theta + theta_t,
    )


def noise_sigmas(v, omega, rho):
    """Per-channel noise standard deviations for a command (array friendly)."""
    sv = np.sqrt(rho * np.maximum(np.abs(v), V_NOISE_FLOOR))
    sw = np.sqrt(rho * np.maximum(np.abs(omega), OMEGA_NOISE_FLOOR))
    return sv, sw


def apply_actuation_noise(
    cmd: VelocityCommand, model: NoiseModel, rng: np.random.Generator
) -> VelocityCommand:
    """Perturb a command with zero-mean Gaussian actuation noise.

    Disabled or zero-rho models return the command unchanged without
    consuming any draws, so the stream stays aligned with the noise setting.
    """
    if not model.enabled or model.rho == 0.0:
        return cmd
    draws = rng.standard_normal(2)
    sv, sw = noise_sigmas(cmd.v, cmd.omega, model.rho)
    return VelocityCommand(cmd.v + sv * draws[0], cmd.omega + sw * draws[1])
