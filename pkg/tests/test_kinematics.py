import math

import numpy as np
import pytest

from formation_sim.geometry import Pose
from formation_sim.kinematics import (
    NoiseModel,
    VelocityCommand,
    apply_actuation_noise,
    unicycle_step,
)


def rk4_unicycle(pose, cmd, duration, substeps=1000):
    """Independent numeric oracle: RK4 on the unicycle ODE."""
    h = duration / substeps
    s = np.array([pose.x, pose.y, pose.theta], dtype=float)

    def f(state):
        return np.array(
            [cmd.v * math.cos(state[2]), cmd.v * math.sin(state[2]), cmd.omega]
        )

    for _ in range(substeps):
        k1 = f(s)
        k2 = f(s + 0.5 * h * k1)
        k3 = f(s + 0.5 * h * k2)
        k4 = f(s + h * k3)
        s = s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return s


def test_straight_line():
    p = unicycle_step(Pose(0, 0, 0), VelocityCommand(0.1, 0.0), 0.1)
    assert (p.x, p.y, p.theta) == pytest.approx((0.01, 0, 0), abs=1e-15)


def test_pure_rotation():
    p = unicycle_step(Pose(0, 0, 0), VelocityCommand(0.0, 0.1), 0.1)
    assert (p.x, p.y, p.theta) == pytest.approx((0, 0, 0.01), abs=1e-15)


def test_arc_against_rk4_oracle():
    cmd = VelocityCommand(0.1, 0.1)
    p = unicycle_step(Pose(0, 0, 0), cmd, 0.1)
    # values frozen from the RK4 oracle at 1000 substeps
    assert p.x == pytest.approx(9.99983333e-03, abs=1e-9)
    assert p.y == pytest.approx(4.99995833e-05, abs=1e-9)
    assert p.theta == pytest.approx(0.01, abs=1e-12)
    oracle = rk4_unicycle(Pose(0, 0, 0), cmd, 0.1)
    assert p.x == pytest.approx(oracle[0], abs=1e-9)
    assert p.y == pytest.approx(oracle[1], abs=1e-9)
    assert p.theta == pytest.approx(oracle[2], abs=1e-9)


def test_arc_against_rk4_random():
    rng = np.random.default_rng(3)
    for _ in range(20):
        pose = Pose(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3))
        cmd = VelocityCommand(rng.uniform(-0.3, 0.3), rng.uniform(-0.5, 0.5))
        duration = rng.uniform(0.01, 0.5)
        p = unicycle_step(pose, cmd, duration)
        oracle = rk4_unicycle(pose, cmd, duration)
        assert p.x == pytest.approx(oracle[0], abs=1e-9)
        assert p.y == pytest.approx(oracle[1], abs=1e-9)


@pytest.mark.parametrize("v", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("duration", [0.05, 0.1, 0.2])
def test_continuous_at_zero_omega(v, duration):
    arc = unicycle_step(Pose(0, 0, 0), VelocityCommand(v, 1e-9), duration)
    straight = unicycle_step(Pose(0, 0, 0), VelocityCommand(v, 0.0), duration)
    # the position must join the straight-line limit; the heading difference
    # is exactly the commanded omega * duration, not a numerical artifact
    assert abs(arc.x - straight.x) < 1e-10
    assert abs(arc.y - straight.y) < 1e-10
    assert arc.theta - straight.theta == pytest.approx(1e-9 * duration, rel=1e-9)


def test_two_half_steps_equal_full_step():
    rng = np.random.default_rng(5)
    for _ in range(50):
        pose = Pose(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3))
        cmd = VelocityCommand(rng.uniform(-0.3, 0.3), rng.uniform(-0.5, 0.5))
        T = rng.uniform(0.02, 0.4)
        full = unicycle_step(pose, cmd, T)
        half = unicycle_step(unicycle_step(pose, cmd, T / 2), cmd, T / 2)
        assert full.x == pytest.approx(half.x, abs=1e-12)
        assert full.y == pytest.approx(half.y, abs=1e-12)
        assert full.theta == pytest.approx(half.theta, abs=1e-12)


def test_heading_wrapped_after_step():
    p = unicycle_step(Pose(0, 0, 3.0), VelocityCommand(0.0, 1.0), 1.0)
    assert -math.pi < p.theta <= math.pi
    assert p.theta == pytest.approx(4.0 - 2 * math.pi, abs=1e-12)


def test_rejects_nonpositive_duration():
    for bad in (0.0, -0.1):
        with pytest.raises(ValueError):
            unicycle_step(Pose(0, 0, 0), VelocityCommand(0.1, 0.0), bad)


def test_command_requires_finite_values():
    with pytest.raises(ValueError):
        VelocityCommand(math.inf, 0.0)


def test_noise_zero_rho_is_identity():
    cmd = VelocityCommand(0.1, 0.05)
    rng = np.random.default_rng(0)
    assert apply_actuation_noise(cmd, NoiseModel(0.0), rng) == cmd
    assert apply_actuation_noise(cmd, NoiseModel(1e-5, enabled=False), rng) == cmd
    # no draws were consumed
    assert rng.random() == np.random.default_rng(0).random()


def test_noise_seeded_determinism():
    cmd = VelocityCommand(0.1, 0.0)
    model = NoiseModel(1.4153e-5)
    a = apply_actuation_noise(cmd, model, np.random.default_rng(42))
    b = apply_actuation_noise(cmd, model, np.random.default_rng(42))
    assert a == b
    c = apply_actuation_noise(cmd, model, np.random.default_rng(43))
    assert c != a


def test_noise_sample_mean():
    # law-of-large-numbers check on the sampler itself
    rho = 1.4153e-5
    n = 100_000
    rng = np.random.default_rng(2024)
    model = NoiseModel(rho)
    vs = np.array(
        [apply_actuation_noise(VelocityCommand(0.1, 0.0), model, rng).v for _ in range(n)]
    )
    sigma = math.sqrt(rho * 0.1)
    assert abs(vs.mean() - 0.1) < 3 * sigma / math.sqrt(n)
    assert vs.std() == pytest.approx(sigma, rel=0.02)


def test_noise_model_rejects_negative_rho():
    with pytest.raises(ValueError):
        NoiseModel(-1e-9)
