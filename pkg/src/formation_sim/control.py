"""Per-slave velocity command computation.

The main controller picks each slave's command by minimizing the expected
weighted formation error one cycle ahead under Bernoulli command delivery:

    J(u) = p * (||e_next(u)||_W^2 + s * ||u - feed||^2)
           + (1 - p) * ||e_next(hold)||_W^2 + rho * T * (u.v^2 + u.omega^2)

where e_next propagates master and slave through the cycle's two execution
segments (previous commands until the switch, then the given ones), feed is
the clamped master command (the rigid-motion feedforward), s is the command
smoothing weight (see DemParams) and the last term charges commanded motion
for the actuation noise it admits. The hold branch is constant in u but kept
so reported objective values are the full expectation. Minimization is a
deterministic multi-resolution grid search over the command box; a
brute-force grid oracle and a proportional baseline controller are provided
alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .formation import ErrorVec, WeightMatrix, formation_error, weighted_error_norm
from .geometry import IDENTITY, Pose, TWO_PI
from .kinematics import ARC_EPSILON, VelocityCommand, unicycle_step
from .netproto import CycleTiming

DEFAULT_GRID_POINTS = 41
DEFAULT_REFINEMENTS = 6


@dataclass(frozen=True)
class DemParams:
    """Parameters of the expectation-minimizing controller.

    p_assumed is the delivery probability used inside the objective; it may
    differ from the true link probability (set it to 1 when the link quality
    is unknown). T and d mirror the cycle timing the controller plans against.
    v_max and omega_max bound the returned command per channel.

    command_smoothing weighs the squared deviation of the command from the
    clamped master command (the rigid-motion feedforward). It spreads error
    correction over a horizon of roughly smoothing/hit_duration seconds
    instead of finishing it within one cycle; without it, corrections
    saturate the command box for millimeter errors, and a saturated command
    stuck at a slave through a run of delivery losses drives the formation
    apart far faster than the per-cycle correction capacity can recover.
    The term vanishes at the feedforward, so following the master exactly is
    never penalized, and it scales with p_assumed like the success branch.
    """

    p_assumed: float
    weights: WeightMatrix
    rho: float
    T: float
    d: float
    v_max: float
    omega_max: float
    command_smoothing: float = 0.05

    def __post_init__(self):
        if not (math.isfinite(self.p_assumed) and 0.0 <= self.p_assumed <= 1.0):
            raise ValueError(f"p_assumed must be in [0, 1], got {self.p_assumed!r}")
        if not (math.isfinite(self.rho) and self.rho >= 0.0):
            raise ValueError("rho must be finite and >= 0")
        if not (self.v_max > 0.0 and self.omega_max > 0.0):
            raise ValueError("v_max and omega_max must be > 0")
        if not (math.isfinite(self.command_smoothing) and self.command_smoothing >= 0.0):
            raise ValueError("command_smoothing must be finite and >= 0")

    def cycle_timing(self) -> CycleTiming:
        return CycleTiming(self.T, self.d)


@dataclass(frozen=True)
class ControlInputState:
    """What the master knows about one slave when computing its command.

    master_prev_cmd is the command the master itself executes before the
    switch; None means it equals master_cmd (steady schedule).
    """

    error_now: ErrorVec
    master_cmd: VelocityCommand
    slave_prev_cmd: VelocityCommand
    master_prev_cmd: VelocityCommand | None = None

    @property
    def master_prev(self) -> VelocityCommand:
        return self.master_cmd if self.master_prev_cmd is None else self.master_prev_cmd


def clamp_command(cmd: VelocityCommand, v_max: float, omega_max: float) -> VelocityCommand:
    """Per-channel saturation to [-v_max, v_max] x [-omega_max, omega_max]."""
    if not (v_max > 0.0 and omega_max > 0.0):
        raise ValueError("clamp bounds must be > 0")
    return VelocityCommand(
        min(max(cmd.v, -v_max), v_max),
        min(max(cmd.omega, -omega_max), omega_max),
    )


def predict_error_next(
    error_now: ErrorVec,
    desired: Pose,
    master_cmd: VelocityCommand,
    slave_cmd: VelocityCommand,
    timing: CycleTiming,
    slave_prev_cmd: VelocityCommand,
    master_prev_cmd: VelocityCommand | None = None,
    desired_end: Pose | None = None,
) -> ErrorVec:
    """Noise-free formation error one cycle ahead.

    Reconstructs the pair in a master-at-origin frame, runs both robots
    through the cycle's two segments (previous commands, then the given
    ones after the switch) and measures the slave's error at the cycle end.
    desired_end supports references that move with the master's heading: it
    is the slot the error is measured against at the cycle end, defaulting
    to the same slot the current error was measured against.
    """
    if master_prev_cmd is None:
        master_prev_cmd = master_cmd
    if desired_end is None:
        desired_end = desired
    master = IDENTITY
    slave = Pose(
        desired.x + error_now.ex,
        desired.y + error_now.ey,
        desired.theta + error_now.etheta,
    )
    hold = timing.hold_duration
    if hold > 0.0:
        master = unicycle_step(master, master_prev_cmd, hold)
        slave = unicycle_step(slave, slave_prev_cmd, hold)
    master = unicycle_step(master, master_cmd, timing.hit_duration)
    slave = unicycle_step(slave, slave_cmd, timing.hit_duration)
    return formation_error(master, slave, desired_end)


def dem_objective(
    state: ControlInputState,
    desired: Pose,
    params: DemParams,
    timing: CycleTiming | None = None,
    desired_end: Pose | None = None,
):
    """Scalar objective J(u) minimized by dem_command, as a callable.

    Useful for verification: the returned function evaluates the full
    expected cost of a candidate command, including the hold branch and the
    motion penalty.
    """
    if timing is None:
        timing = params.cycle_timing()
    hold_err = predict_error_next(
        state.error_now,
        desired,
        state.master_cmd,
        state.slave_prev_cmd,
        timing,
        state.slave_prev_cmd,
        state.master_prev,
        desired_end,
    )
    hold_term = (1.0 - params.p_assumed) * weighted_error_norm(hold_err, params.weights)
    feed = clamp_command(state.master_cmd, params.v_max, params.omega_max)

    def objective(u: VelocityCommand) -> float:
        e = predict_error_next(
            state.error_now,
            desired,
            state.master_cmd,
            u,
            timing,
            state.slave_prev_cmd,
            state.master_prev,
            desired_end,
        )
        dv = u.v - feed.v
        dw = u.omega - feed.omega
        return (
            params.p_assumed * weighted_error_norm(e, params.weights)
            + params.p_assumed * params.command_smoothing * (dv * dv + dw * dw)
            + hold_term
            + params.rho * timing.T * (u.v * u.v + u.omega * u.omega)
        )

    return objective


# ---------------------------------------------------------------------------
# Vectorized solver internals. A batch holds any broadcastable set of
# control problems (the simulator uses shape (runs, slaves)); all the
# u-independent kinematics is precomputed so grid passes touch only small
# per-column arrays.
# ---------------------------------------------------------------------------


def _wrap_array(theta):
    return np.pi - np.mod(np.pi - theta, TWO_PI)


def _step_arrays(x, y, th, v, w, duration):
    """Vectorized constant-twist step; mirrors unicycle_step branch for branch."""
    theta_t = w * duration
    small = np.abs(theta_t) < ARC_EPSILON
    w_safe = np.where(small, 1.0, w)
    dxb = np.where(
        small,
        v * duration * (1.0 - theta_t * theta_t / 6.0),
        (v / w_safe) * np.sin(theta_t),
    )
    dyb = np.where(
        small,
        v * duration * (theta_t / 2.0),
        (v / w_safe) * (1.0 - np.cos(theta_t)),
    )
    c, s = np.cos(th), np.sin(th)
    return x + c * dxb - s * dyb, y + s * dxb + c * dyb, _wrap_array(th + theta_t)


def _linspace_tail(lo, hi, n):
    """linspace along a new trailing axis, matching np.linspace sample points."""
    step = (hi - lo) / (n - 1)
    vals = lo[..., None] + np.arange(n) * step[..., None]
    vals[..., -1] = hi
    return vals


class _DemBatch:
    """Precomputed one-cycle objective for a batch of control problems.

    (dx, dy, dth) is the desired slot the current error was measured
    against; (dx2, dy2, dth2), when given, is the slot the predicted error
    is scored against at the cycle end (references that move with the
    master's heading). Defaults to the same slot.
    """

    def __init__(self, ex, ey, eth, dx, dy, dth, sp_v, sp_w, mc_v, mc_w,
                 mp_v, mp_w, params: DemParams, timing: CycleTiming,
                 dx2=None, dy2=None, dth2=None):
        if dx2 is None:
            dx2, dy2, dth2 = dx, dy, dth
        (ex, ey, eth, dx, dy, dth, dx2, dy2, dth2,
         sp_v, sp_w, mc_v, mc_w, mp_v, mp_w) = (
            np.asarray(a, dtype=float)
            for a in (ex, ey, eth, dx, dy, dth, dx2, dy2, dth2,
                      sp_v, sp_w, mc_v, mc_w, mp_v, mp_w)
        )
        shape = np.broadcast_shapes(
            ex.shape, ey.shape, eth.shape, dx.shape, dy.shape, dth.shape,
            dx2.shape, dy2.shape, dth2.shape,
            sp_v.shape, sp_w.shape, mc_v.shape, mc_w.shape, mp_v.shape, mp_w.shape,
        )
        self.shape = shape
        self.p = params.p_assumed
        w = params.weights
        self.wx, self.wy, self.wth = w.wx, w.wy, w.wtheta
        self.rT = params.rho * timing.T
        self.smooth = params.p_assumed * params.command_smoothing
        self.b = timing.hit_duration
        self.v_max = params.v_max
        self.w_max = params.omega_max
        self.dx, self.dy, self.dth = dx2, dy2, dth2
        self.sp_v, self.sp_w = np.broadcast_to(sp_v, shape), np.broadcast_to(sp_w, shape)
        self.mc_v, self.mc_w = mc_v, mc_w
        self.fv = np.clip(mc_v, -self.v_max, self.v_max)
        self.fw = np.clip(mc_w, -self.w_max, self.w_max)

        # poses at the switch instant, master-at-origin frame
        r0x, r0y, r0t = dx + ex, dy + ey, _wrap_array(dth + eth)
        hold = timing.hold_duration
        if hold > 0.0:
            mx, my, mth = _step_arrays(0.0, 0.0, 0.0, mp_v, mp_w, hold)
            sx, sy, sth = _step_arrays(r0x, r0y, r0t, sp_v, sp_w, hold)
        else:
            mx = my = mth = np.zeros(())
            sx, sy, sth = r0x, r0y, r0t
        mx, my, mth = _step_arrays(mx, my, mth, mc_v, mc_w, self.b)
        self.mx = np.broadcast_to(np.asarray(mx, dtype=float), shape)
        self.my = np.broadcast_to(np.asarray(my, dtype=float), shape)
        self.mth = np.broadcast_to(np.asarray(mth, dtype=float), shape)
        self.sx = np.broadcast_to(np.asarray(sx, dtype=float), shape)
        self.sy = np.broadcast_to(np.asarray(sy, dtype=float), shape)
        self.sth = np.broadcast_to(np.asarray(sth, dtype=float), shape)
        self.cm, self.sm = np.cos(self.mth), np.sin(self.mth)

        # hold branch, constant in u
        hx, hy, hth = _step_arrays(self.sx, self.sy, self.sth,
                                   self.sp_v, self.sp_w, self.b)
        ehx = self.cm * (hx - self.mx) + self.sm * (hy - self.my) - self.dx
        ehy = -self.sm * (hx - self.mx) + self.cm * (hy - self.my) - self.dy
        ehth = _wrap_array(hth - self.mth - self.dth)
        self.c_hold = np.broadcast_to(
            self.wx * ehx * ehx + self.wy * ehy * ehy + self.wth * ehth * ehth, shape
        )

    def objective_at(self, V, W):
        """J at explicit command points; V, W shaped like self.shape + (k,)."""
        x1, y1, th1 = _step_arrays(
            self.sx[..., None], self.sy[..., None], self.sth[..., None], V, W, self.b
        )
        cm, sm = self.cm[..., None], self.sm[..., None]
        dxm = x1 - self.mx[..., None]
        dym = y1 - self.my[..., None]
        ex = cm * dxm + sm * dym - self.dx[..., None]
        ey = -sm * dxm + cm * dym - self.dy[..., None]
        eth = _wrap_array(th1 - self.mth[..., None] - self.dth[..., None])
        h = self.wx * ex * ex + self.wy * ey * ey + self.wth * eth * eth
        dv = V - np.asarray(self.fv)[..., None]
        dw = W - np.asarray(self.fw)[..., None]
        return (
            self.p * h
            + self.smooth * (dv * dv + dw * dw)
            + (1.0 - self.p) * self.c_hold[..., None]
            + self.rT * (V * V + W * W)
        )

    def best_on_grid(self, v_lo, v_hi, w_lo, w_hi, n):
        """Minimum of J over the n x n grid spanning the per-problem boxes.

        For a fixed omega the objective is an exact quadratic in v, so each
        grid column is resolved from its vertex-adjacent grid points instead
        of evaluating the whole n x n mesh. Ties break toward the lowest v,
        then the lowest omega, matching a dense row-major scan.
        """
        W = _linspace_tail(w_lo, w_hi, n)
        theta_t = W * self.b
        small = np.abs(theta_t) < ARC_EPSILON
        th_safe = np.where(small, 1.0, theta_t)
        sc = np.where(small, 1.0 - theta_t * theta_t / 6.0, np.sin(theta_t) / th_safe)
        cc = np.where(small, theta_t / 2.0, (1.0 - np.cos(theta_t)) / th_safe)
        csl, ssl = np.cos(self.sth)[..., None], np.sin(self.sth)[..., None]
        gx = self.b * (csl * sc - ssl * cc)
        gy = self.b * (ssl * sc + csl * cc)
        cm, sm = self.cm[..., None], self.sm[..., None]
        Gx = cm * gx + sm * gy
        Gy = -sm * gx + cm * gy
        ax = (
            self.cm * (self.sx - self.mx) + self.sm * (self.sy - self.my) - self.dx
        )[..., None]
        ay = (
            -self.sm * (self.sx - self.mx) + self.cm * (self.sy - self.my) - self.dy
        )[..., None]
        eth = _wrap_array(
            self.sth[..., None] + theta_t - self.mth[..., None] - self.dth[..., None]
        )
        fv = np.asarray(self.fv)[..., None]
        fw = np.asarray(self.fw)[..., None]
        A = self.p * (self.wx * Gx * Gx + self.wy * Gy * Gy) + self.rT + self.smooth
        B = (
            2.0 * self.p * (self.wx * ax * Gx + self.wy * ay * Gy)
            - 2.0 * self.smooth * fv
        )
        C = (
            self.p * (self.wx * ax * ax + self.wy * ay * ay + self.wth * eth * eth)
            + self.smooth * (fv * fv + (W - fw) * (W - fw))
            + (1.0 - self.p) * self.c_hold[..., None]
            + self.rT * W * W
        )

        step = ((v_hi - v_lo) / (n - 1))[..., None]
        v_lo_t, v_hi_t = v_lo[..., None], v_hi[..., None]
        pos = A > 0.0
        A_safe = np.where(pos, A, 1.0)
        kf = (-B / (2.0 * A_safe) - v_lo_t) / step
        k0 = np.clip(np.floor(kf), 0.0, float(n - 1))
        k1 = np.clip(k0 + 1.0, 0.0, float(n - 1))
        v0 = np.where(k0 == n - 1, v_hi_t, v_lo_t + k0 * step)
        v1 = np.where(k1 == n - 1, v_hi_t, v_lo_t + k1 * step)
        q0 = (A * v0 + B) * v0 + C
        q1 = (A * v1 + B) * v1 + C
        take1 = q1 < q0
        vq = np.where(take1, v1, v0)
        qq = np.where(take1, q1, q0)
        # flat columns: linear (pick the descending end) or constant (lowest v)
        v_lin = np.where(B < 0.0, v_hi_t, v_lo_t)
        q_lin = B * v_lin + C
        v_col = np.where(pos, vq, np.broadcast_to(v_lin, qq.shape))
        q_col = np.where(pos, qq, q_lin)

        q_min = q_col.min(axis=-1, keepdims=True)
        at_min = q_col == q_min
        v_pick = np.where(at_min, v_col, np.inf).min(axis=-1, keepdims=True)
        at_v = at_min & (v_col == v_pick)
        w_pick = np.where(at_v, np.broadcast_to(W, at_v.shape), np.inf).min(axis=-1)
        return q_min[..., 0], v_pick[..., 0], w_pick

    def solve(self, points=DEFAULT_GRID_POINTS, refinements=DEFAULT_REFINEMENTS):
        """Multi-resolution grid minimization plus exact safety candidates.

        The clamped hold command and the clamped master command are always
        evaluated alongside the refined grid incumbent, so the result is
        never worse than holding and reproduces a feasible rigid motion
        exactly. Returns per-problem (v, omega) arrays.
        """
        shape = self.shape
        v_lo = np.full(shape, -self.v_max)
        v_hi = np.full(shape, self.v_max)
        w_lo = np.full(shape, -self.w_max)
        w_hi = np.full(shape, self.w_max)
        best_j = np.full(shape, np.inf)
        best_v = np.zeros(shape)
        best_w = np.zeros(shape)
        for _ in range(refinements + 1):
            q, v, w = self.best_on_grid(v_lo, v_hi, w_lo, w_hi, points)
            better = q < best_j
            best_j = np.where(better, q, best_j)
            best_v = np.where(better, v, best_v)
            best_w = np.where(better, w, best_w)
            v_lo, v_hi = _shrink_axis(best_v, v_lo, v_hi, -self.v_max, self.v_max)
            w_lo, w_hi = _shrink_axis(best_w, w_lo, w_hi, -self.w_max, self.w_max)

        hold_v = np.clip(self.sp_v, -self.v_max, self.v_max)
        hold_w = np.clip(self.sp_w, -self.w_max, self.w_max)
        mast_v = np.broadcast_to(np.clip(self.mc_v, -self.v_max, self.v_max), shape)
        mast_w = np.broadcast_to(np.clip(self.mc_w, -self.w_max, self.w_max), shape)
        cand_v = np.stack(
            [np.broadcast_to(best_v, shape), hold_v, mast_v], axis=-1
        )
        cand_w = np.stack(
            [np.broadcast_to(best_w, shape), hold_w, mast_w], axis=-1
        )
        j3 = self.objective_at(cand_v, cand_w)
        j_min = j3.min(axis=-1, keepdims=True)
        at_min = j3 == j_min
        v_pick = np.where(at_min, cand_v, np.inf).min(axis=-1, keepdims=True)
        at_v = at_min & (cand_v == v_pick)
        w_pick = np.where(at_v, cand_w, np.inf).min(axis=-1)
        return v_pick[..., 0], w_pick


def _shrink_axis(center, lo, hi, lo0, hi0):
    """Quarter the search window around the incumbent, kept inside the box."""
    width = (hi - lo) * 0.25
    new_lo = np.clip(center - width * 0.5, lo0, hi0 - width)
    # cap the upper edge: (hi0 - width) + width can overshoot hi0 by one ulp
    return new_lo, np.minimum(new_lo + width, hi0)


def dem_command(
    state: ControlInputState,
    desired: Pose,
    params: DemParams,
    timing: CycleTiming | None = None,
    points: int = DEFAULT_GRID_POINTS,
    refinements: int = DEFAULT_REFINEMENTS,
    desired_end: Pose | None = None,
) -> VelocityCommand:
    """Expected-formation-error minimizing command for one slave.

    Returns the argmin of the cycle objective over the command box
    [-v_max, v_max] x [-omega_max, omega_max]. Deterministic: the grid
    search and its tie-breaking (lowest v, then lowest omega) contain no
    randomness, and the clamped hold and master commands are always among
    the evaluated candidates.
    """
    if timing is None:
        timing = params.cycle_timing()
    mp = state.master_prev
    end = (None, None, None) if desired_end is None else (
        desired_end.x, desired_end.y, desired_end.theta
    )
    batch = _DemBatch(
        state.error_now.ex, state.error_now.ey, state.error_now.etheta,
        desired.x, desired.y, desired.theta,
        state.slave_prev_cmd.v, state.slave_prev_cmd.omega,
        state.master_cmd.v, state.master_cmd.omega,
        mp.v, mp.omega,
        params, timing,
        dx2=end[0], dy2=end[1], dth2=end[2],
    )
    v, w = batch.solve(points, refinements)
    return VelocityCommand(float(v), float(w))


def grid_oracle_minimize(
    objective,
    box,
    coarse: int = DEFAULT_GRID_POINTS,
    refinements: int = DEFAULT_REFINEMENTS,
    vectorized: bool = False,
) -> VelocityCommand:
    """Deterministic grid minimizer over a command box.

    Parameters
    ----------
    objective : callable
        With vectorized=False, maps a VelocityCommand to a float. With
        vectorized=True, maps broadcastable (v, omega) arrays to an array.
    box : ((v_lo, v_hi), (omega_lo, omega_hi))
        Closed search box.
    coarse : int
        Grid points per axis, >= 3.
    refinements : int
        Number of re-grids; each shrinks the window to a quarter of its
        width around the incumbent, clipped inside the box.

    Ties break toward the lowest v, then the lowest omega (row-major scan).
    """
    if coarse < 3:
        raise ValueError("coarse grid needs at least 3 points per axis")
    if refinements < 0:
        raise ValueError("refinements must be >= 0")
    (v_lo0, v_hi0), (w_lo0, w_hi0) = box
    if not (v_lo0 <= v_hi0 and w_lo0 <= w_hi0):
        raise ValueError("box bounds must be ordered")
    if vectorized:
        f = objective
    else:
        f = np.vectorize(lambda v, w: objective(VelocityCommand(float(v), float(w))))
    v_lo, v_hi, w_lo, w_hi = v_lo0, v_hi0, w_lo0, w_hi0
    best = None
    for _ in range(refinements + 1):
        V, W = np.meshgrid(
            np.linspace(v_lo, v_hi, coarse),
            np.linspace(w_lo, w_hi, coarse),
            indexing="ij",
        )
        J = np.asarray(f(V, W), dtype=float)
        k = int(np.argmin(J))
        cand = (float(J.flat[k]), float(V.flat[k]), float(W.flat[k]))
        if best is None or cand[0] < best[0]:
            best = cand
        v_lo, v_hi = _shrink_scalar(best[1], v_lo, v_hi, v_lo0, v_hi0)
        w_lo, w_hi = _shrink_scalar(best[2], w_lo, w_hi, w_lo0, w_hi0)
    return VelocityCommand(best[1], best[2])


def _shrink_scalar(center, lo, hi, lo0, hi0):
    width = (hi - lo) * 0.25
    new_lo = min(max(center - width * 0.5, lo0), hi0 - width)
    return new_lo, min(new_lo + width, hi0)


def baseline_arrays(ex, ey, eth, mc_v, mc_w, k_pos, k_theta, v_max, omega_max):
    """Proportional baseline on arrays; shared by the scalar op and the simulator."""
    v = mc_v - k_pos * ex
    steer = np.where(v >= 0.0, 1.0, -1.0)
    w = mc_w - k_pos * ey * steer - k_theta * eth
    return np.clip(v, -v_max, v_max), np.clip(w, -omega_max, omega_max)


def baseline_pd_command(
    state: ControlInputState,
    gains: tuple[float, float],
    params: DemParams,
    timing: CycleTiming | None = None,
) -> VelocityCommand:
    """Feed-forward master command plus proportional correction, clamped.

    The correction drives the measured error toward zero: a slave ahead of
    its desired spot (positive ex) slows down, lateral offset steers toward
    the spot with the sign tied to the direction of travel, and heading
    error feeds the angular channel. With zero error this returns the
    clamped master command.
    """
    k_pos, k_theta = gains
    if not (k_pos > 0.0 and k_theta > 0.0):
        raise ValueError("gains must be > 0")
    e = state.error_now
    v, w = baseline_arrays(
        e.ex, e.ey, e.etheta,
        state.master_cmd.v, state.master_cmd.omega,
        k_pos, k_theta, params.v_max, params.omega_max,
    )
    return VelocityCommand(float(v), float(w))
