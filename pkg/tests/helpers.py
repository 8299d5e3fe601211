"""Shared test oracles: random control states and a single-pass dense-grid scan."""

import math

import numpy as np

from formation_sim.control import ControlInputState
from formation_sim.formation import ErrorVec, formation_error, weighted_error_norm
from formation_sim.geometry import IDENTITY, Pose
from formation_sim.kinematics import VelocityCommand, unicycle_step

SQUARE_SLOTS = (Pose(0.6, 0.0, 0.0), Pose(0.0, 0.6, 0.0), Pose(0.6, 0.6, 0.0))


def sample_control_state(rng, v_span=0.15):
    """A generic mid-flight control problem: nonzero error, moving master."""
    mag = rng.uniform(0.02, 0.08)
    ang = rng.uniform(0.0, 2.0 * math.pi)
    eth = float(rng.choice([-1.0, 1.0])) * rng.uniform(0.05, 0.3)
    error = ErrorVec(mag * math.cos(ang), mag * math.sin(ang), eth)
    mc = VelocityCommand(rng.uniform(0.03, v_span), rng.uniform(-v_span, v_span))
    mp = VelocityCommand(rng.uniform(0.03, v_span), rng.uniform(-v_span, v_span))
    sp = VelocityCommand(rng.uniform(-v_span, v_span), rng.uniform(-v_span, v_span))
    desired = SQUARE_SLOTS[int(rng.integers(len(SQUARE_SLOTS)))]
    return ControlInputState(error, mc, sp, mp), desired


class DenseGrid:
    """Single-pass dense scan of the command objective over the full box.

    Independent of the production solver: the hold branch and the segment
    endpoints come from the public kinematics ops, and the whole n x n grid
    is evaluated in one broadcast pass (heavy trig only along the omega
    axis). The parts that do not depend on (p_assumed, rho) are precomputed
    once per control state so parameter sweeps reuse them.
    """

    def __init__(self, state, desired, weights, timing, v_max, omega_max,
                 smoothing, n=2001):
        a, b = timing.hold_duration, timing.hit_duration
        self.T = timing.T
        master = IDENTITY
        slave = Pose(
            desired.x + state.error_now.ex,
            desired.y + state.error_now.ey,
            desired.theta + state.error_now.etheta,
        )
        if a > 0.0:
            master = unicycle_step(master, state.master_prev, a)
            slave = unicycle_step(slave, state.slave_prev_cmd, a)
        master = unicycle_step(master, state.master_cmd, b)
        hold_end = unicycle_step(slave, state.slave_prev_cmd, b)
        self.c_hold = weighted_error_norm(
            formation_error(master, hold_end, desired), weights
        )

        self.n = n
        self.ws = np.linspace(-omega_max, omega_max, n)
        self.vs = np.linspace(-v_max, v_max, n)
        th_t = self.ws * b
        small = np.abs(th_t) < 1e-8
        safe = np.where(small, 1.0, th_t)
        sc = np.where(small, 1.0 - th_t * th_t / 6.0, np.sin(th_t) / safe)
        cc = np.where(small, th_t / 2.0, (1.0 - np.cos(th_t)) / safe)
        gx = b * (math.cos(slave.theta) * sc - math.sin(slave.theta) * cc)
        gy = b * (math.sin(slave.theta) * sc + math.cos(slave.theta) * cc)
        cm, sm = math.cos(master.theta), math.sin(master.theta)
        Gx = cm * gx + sm * gy
        Gy = -sm * gx + cm * gy
        ax = cm * (slave.x - master.x) + sm * (slave.y - master.y) - desired.x
        ay = -sm * (slave.x - master.x) + cm * (slave.y - master.y) - desired.y
        eth = np.pi - np.mod(
            np.pi - (slave.theta + th_t - master.theta - desired.theta), 2.0 * np.pi
        )

        EX = ax + self.vs[:, None] * Gx[None, :]
        EY = ay + self.vs[:, None] * Gy[None, :]
        EX *= EX
        EY *= EY
        K = weights.wx * EX
        K += weights.wy * EY
        K += (weights.wtheta * eth * eth)[None, :]
        fv = min(max(state.master_cmd.v, -v_max), v_max)
        fw = min(max(state.master_cmd.omega, -omega_max), omega_max)
        K += smoothing * (self.vs[:, None] - fv) ** 2
        K += smoothing * ((self.ws - fw) ** 2)[None, :]
        # K = success-branch error norm plus the smoothing term; the full
        # objective is p*K + (1-p)*c_hold + rho*T*(v^2 + w^2)
        self.K = K

    def effort_grid(self):
        return self.vs[:, None] ** 2 + self.ws[None, :] ** 2

    def min_value(self, p, rho, effort=None, out=None):
        """Minimum objective value over the dense grid for one (p, rho)."""
        J = np.multiply(self.K, p, out=out)
        if rho != 0.0:
            if effort is None:
                effort = self.effort_grid()
            J += rho * self.T * effort
        return float(J.min()) + (1.0 - p) * self.c_hold

    def argmin(self, p, rho):
        J = self.K * p
        if rho != 0.0:
            J += rho * self.T * self.effort_grid()
        k = int(np.argmin(J))
        return VelocityCommand(float(self.vs[k // self.n]), float(self.ws[k % self.n]))


def dense_grid_argmin(state, desired, params, timing, n=2001):
    grid = DenseGrid(
        state, desired, params.weights, timing,
        params.v_max, params.omega_max, params.command_smoothing, n,
    )
    return grid.argmin(params.p_assumed, params.rho)
