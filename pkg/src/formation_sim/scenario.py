"""Experiment configurations and the simulation loop.

A run advances a master plus its slaves through N control cycles: measure
formation errors, compute per-slave commands, draw delivery outcomes, and
propagate everyone through the cycle's two execution segments with actuation
noise. Runs are deterministic given (seed, run_index); batches of runs share
the vectorized control solve but keep one random stream per run, so a batch
reproduces the exact same trajectories as individual runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import (
    DEFAULT_GRID_POINTS,
    DEFAULT_REFINEMENTS,
    DemParams,
    _DemBatch,
    _step_arrays,
    _wrap_array,
    baseline_arrays,
)
from .formation import FormationSpec, WeightMatrix, square_formation
from .kinematics import NoiseModel, VelocityCommand, ZERO_COMMAND, noise_sigmas
from .netproto import CycleTiming, LinkModel

DEFAULT_PATH_LENGTH = 9.0  # meters of master travel; 900 cycles at v=0.1, T=0.1
DEFAULT_SIDE = 0.6
DEFAULT_RHO = 1.4153e-5
DEFAULT_D = 0.5
DEFAULT_RUNS = 50
DEFAULT_CLAMP_FACTOR = 1.5
PERIOD_FRACTION = 4.0 / 9.0
RAMP_FRACTION = 0.125

GROUP_NAMES = ("comp1", "comp2", "rob1", "rob2")


@dataclass(frozen=True)
class MasterSchedule:
    """Preplanned master command per control cycle.

    period_cycles is the steering wave period when the schedule is periodic,
    None for aperiodic schedules (e.g. straight lines).
    """

    commands: tuple[VelocityCommand, ...]
    T: float
    period_cycles: int | None = None

    def __post_init__(self):
        if len(self.commands) == 0:
            raise ValueError("schedule must contain at least one cycle")
        if not (self.T > 0.0):
            raise ValueError("cycle duration T must be > 0")
        object.__setattr__(self, "commands", tuple(self.commands))

    @property
    def total_cycles(self) -> int:
        return len(self.commands)

    def v_array(self) -> np.ndarray:
        return np.array([c.v for c in self.commands])

    def omega_array(self) -> np.ndarray:
        return np.array([c.omega for c in self.commands])


def _trapezoid_wave(phase: float, ramp: float) -> float:
    """Continuous trapezoid lobe pair over one period phase in [0, 1).

    Rises 0 -> +1 over `ramp`, holds +1, falls through zero to -1 over
    another `ramp` (the sharpest turn transition, twice the entry slope),
    holds -1, and returns to 0 over a final `ramp`, so consecutive periods
    join without a step.
    """
    plateau = (1.0 - 3.0 * ramp) / 2.0
    if phase < ramp:
        return phase / ramp
    if phase < ramp + plateau:
        return 1.0
    if phase < 2.0 * ramp + plateau:
        return 1.0 - 2.0 * (phase - ramp - plateau) / ramp
    if phase < 2.0 * ramp + 2.0 * plateau:
        return -1.0
    return -1.0 + (phase - 2.0 * ramp - 2.0 * plateau) / ramp


def s_path_schedule(
    v_m: float,
    T: float,
    path_length: float,
    ramp_fraction: float = RAMP_FRACTION,
    period_fraction: float = PERIOD_FRACTION,
    alternate_periods: bool = True,
) -> MasterSchedule:
    """Winding-path schedule: constant linear velocity, periodic steering wave.

    The cycle count is path_length / (v_m * T) rounded to the nearest cycle,
    so the commanded travel distance is fixed across sweeps of v_m or T. The
    angular velocity follows a piecewise-constant trapezoid wave with period
    floor(period_fraction * total_cycles) cycles and amplitude numerically
    equal to v_m (v_m = 0.1 m/s pairs with omega in [-0.1, 0.1] rad/s); with
    alternate_periods every other period is sign-flipped.
    """
    if not (v_m > 0.0 and T > 0.0 and path_length > 0.0):
        raise ValueError("v_m, T and path_length must all be > 0")
    if not (0.0 < ramp_fraction <= 0.25):
        raise ValueError("ramp_fraction must be in (0, 0.25]")
    if not (0.0 < period_fraction <= 1.0):
        raise ValueError("period_fraction must be in (0, 1]")
    total = int(round(path_length / (v_m * T)))
    if total < 1:
        raise ValueError("path shorter than one control cycle")
    period = max(int(math.floor(period_fraction * total)), 1)
    commands = []
    for k in range(total):
        j, r = divmod(k, period)
        w = v_m * _trapezoid_wave(r / period, ramp_fraction)
        if alternate_periods and j % 2 == 1:
            w = -w
        commands.append(VelocityCommand(v_m, w))
    return MasterSchedule(tuple(commands), T, period)


def straight_schedule(v_m: float, T: float, path_length: float) -> MasterSchedule:
    """Pure-translation schedule: constant linear velocity, zero steering."""
    if not (v_m > 0.0 and T > 0.0 and path_length > 0.0):
        raise ValueError("v_m, T and path_length must all be > 0")
    total = int(round(path_length / (v_m * T)))
    if total < 1:
        raise ValueError("path shorter than one control cycle")
    return MasterSchedule((VelocityCommand(v_m, 0.0),) * total, T, None)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs: schedule, shape, link, controller, seeds."""

    label: str
    schedule: MasterSchedule
    formation: FormationSpec
    link: LinkModel
    dem: DemParams
    timing: CycleTiming
    noise: NoiseModel
    runs: int
    seed: int
    controller: str = "dem"
    baseline_gains: tuple[float, float] = (2.0, 1.0)
    solver_points: int = DEFAULT_GRID_POINTS
    solver_refinements: int = DEFAULT_REFINEMENTS
    selected_cycles: tuple[int, ...] | None = None
    path_length: float | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.controller not in ("dem", "baseline"):
            raise ValueError(f"unknown controller {self.controller!r}")
        if self.solver_points < 3:
            raise ValueError("solver_points must be >= 3")
        if self.solver_refinements < 0:
            raise ValueError("solver_refinements must be >= 0")


@dataclass(frozen=True)
class RunTrace:
    """Per-cycle record of one run: formation errors and delivery outcomes."""

    run_index: int
    seed: int
    errors: np.ndarray  # (cycles, slaves, 3): ex [m], ey [m], etheta [rad]
    delivered: np.ndarray  # (cycles, slaves) bool

    def pos_err(self) -> np.ndarray:
        """Relative position error magnitude in meters, per (cycle, slave)."""
        return np.hypot(self.errors[:, :, 0], self.errors[:, :, 1])

    def ang_err_deg(self) -> np.ndarray:
        """Signed relative orientation error in degrees, per (cycle, slave)."""
        return np.degrees(self.errors[:, :, 2])


def _clamp_bounds(schedule: MasterSchedule, clamp_factor: float) -> tuple[float, float]:
    """Per-channel command bounds: clamp_factor times the schedule's maxima.

    A zero-steering schedule would give a zero angular bound, which the
    controller cannot accept; fall back to the symmetric bound derived from
    the linear channel.
    """
    v_max = clamp_factor * float(np.max(np.abs(schedule.v_array())))
    w_peak = float(np.max(np.abs(schedule.omega_array())))
    if w_peak == 0.0:
        w_peak = float(np.max(np.abs(schedule.v_array())))
    return v_max, clamp_factor * w_peak


def make_config(
    label: str,
    *,
    v: float = 0.1,
    T: float = 0.1,
    p_true: float = 1.0,
    p_assumed: float = 1.0,
    seed: int = 0,
    runs: int = DEFAULT_RUNS,
    path_length: float = DEFAULT_PATH_LENGTH,
    controller: str = "dem",
    side: float = DEFAULT_SIDE,
    d: float = DEFAULT_D,
    rho: float = DEFAULT_RHO,
    noise_enabled: bool = True,
    clamp_factor: float = DEFAULT_CLAMP_FACTOR,
    command_smoothing: float = 0.05,
    shape: str = "s_curve",
    ramp_fraction: float = RAMP_FRACTION,
    period_fraction: float = PERIOD_FRACTION,
    alternate_periods: bool = True,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
    solver_points: int = DEFAULT_GRID_POINTS,
    solver_refinements: int = DEFAULT_REFINEMENTS,
    baseline_gains: tuple[float, float] = (2.0, 1.0),
    selected_cycles: tuple[int, ...] | None = None,
) -> ExperimentConfig:
    """Assemble a single experiment configuration from scalar settings."""
    if shape == "s_curve":
        schedule = s_path_schedule(
            v, T, path_length, ramp_fraction, period_fraction, alternate_periods
        )
    elif shape == "straight":
        schedule = straight_schedule(v, T, path_length)
    else:
        raise ValueError(f"unknown schedule shape {shape!r}")
    v_max, omega_max = _clamp_bounds(schedule, clamp_factor)
    return ExperimentConfig(
        label=label,
        schedule=schedule,
        formation=square_formation(side),
        link=LinkModel(p_true),
        dem=DemParams(
            p_assumed, WeightMatrix(*weights), rho, T, d, v_max, omega_max,
            command_smoothing=command_smoothing,
        ),
        timing=CycleTiming(T, d),
        noise=NoiseModel(rho, enabled=noise_enabled),
        runs=runs,
        seed=seed,
        controller=controller,
        baseline_gains=baseline_gains,
        solver_points=solver_points,
        solver_refinements=solver_refinements,
        selected_cycles=selected_cycles,
        path_length=path_length,
    )


def build_group(group: str, **overrides) -> list[ExperimentConfig]:
    """Experiment configurations for one of the predefined groups.

    comp1 sweeps the master linear velocity {0.05, 0.1, 0.2} m/s at T = 0.1 s
    under a perfect link; comp2 sweeps the cycle duration {0.05, 0.1, 0.2} s
    at v = 0.1 m/s; rob1 sweeps the true delivery probability {0.9, 0.7, 0.5}
    with the controller told the same value; rob2 sweeps the same link but
    the controller always assumes perfect delivery. Shared defaults: switch
    fraction 0.5, unit weights, rho = 1.4153e-5, square side 0.6 m, 50 runs,
    clamp factor 1.5. Keyword overrides feed make_config.
    """
    if group == "comp1":
        sweep = [(f"comp1_v{v:g}", dict(v=v, T=0.1)) for v in (0.05, 0.1, 0.2)]
    elif group == "comp2":
        sweep = [(f"comp2_T{T:g}", dict(v=0.1, T=T)) for T in (0.05, 0.1, 0.2)]
    elif group == "rob1":
        sweep = [
            (f"rob1_p{p:g}", dict(p_true=p, p_assumed=p)) for p in (0.9, 0.7, 0.5)
        ]
    elif group == "rob2":
        sweep = [
            (f"rob2_p{p:g}", dict(p_true=p, p_assumed=1.0)) for p in (0.9, 0.7, 0.5)
        ]
    else:
        raise ValueError(f"unknown group {group!r}")
    configs = []
    for label, swept in sweep:
        clash = set(swept) & set(overrides)
        if clash:
            raise ValueError(
                f"cannot override swept parameter(s) {sorted(clash)} in group {group}"
            )
        configs.append(make_config(label, **swept, **overrides))
    return configs


def stream_for_run(seed: int, run_index: int) -> np.random.Generator:
    """Per-run random stream, mixed from the experiment seed and the run index."""
    return np.random.default_rng(np.random.SeedSequence([seed, run_index]))


def run_simulation(config: ExperimentConfig, run_index: int) -> RunTrace:
    """Simulate one seeded run; deterministic given (config.seed, run_index)."""
    return run_batch(config, [run_index])[0]


def run_batch(config: ExperimentConfig, run_indices) -> list[RunTrace]:
    """Simulate several runs in lockstep.

    The control solve and pose propagation are vectorized across runs while
    each run keeps its own random stream, so the returned traces are
    identical to running each index through run_simulation separately.
    """
    run_indices = list(run_indices)
    for r in run_indices:
        if not (0 <= r < config.runs):
            raise ValueError(f"run index {r} outside [0, {config.runs})")
    sched = config.schedule
    n_cycles = sched.total_cycles
    n_slaves = config.formation.n_slaves
    n_runs = len(run_indices)
    timing = config.timing
    hold_t = timing.hold_duration
    hit_t = timing.hit_duration
    p_true = config.link.p_true
    noise_on = config.noise.enabled and config.noise.rho > 0.0
    rho_noise = config.noise.rho
    use_dem = config.controller == "dem"
    k_pos, k_theta = config.baseline_gains

    # The formation spec gives each slave's slot at setup, when the master
    # heading is zero; those offsets stay fixed in the world frame (the shape
    # translates with a common heading), so the slot expressed in the master
    # body frame is the offset rotated by the master's current heading.
    des = config.formation.desired
    cx = np.array([p.x for p in des])
    cy = np.array([p.y for p in des])
    dth = np.array([p.theta for p in des])

    rngs = [stream_for_run(config.seed, r) for r in run_indices]

    # world poses, master first; slaves start exactly on the formation
    px = np.zeros((n_runs, n_slaves + 1))
    py = np.zeros((n_runs, n_slaves + 1))
    pth = np.zeros((n_runs, n_slaves + 1))
    px[:, 1:] = cx
    py[:, 1:] = cy
    pth[:, 1:] = dth

    exec_v = np.zeros((n_runs, n_slaves))
    exec_w = np.zeros((n_runs, n_slaves))
    prev_master = ZERO_COMMAND

    errors = np.empty((n_cycles, n_runs, n_slaves, 3))
    delivered_all = np.empty((n_cycles, n_runs, n_slaves), dtype=bool)

    def perturb(v, w):
        sv, sw = noise_sigmas(v, w, rho_noise)
        nv = np.empty_like(v)
        nw = np.empty_like(w)
        for i, g in enumerate(rngs):
            draws = g.standard_normal((v.shape[1], 2))
            nv[i] = v[i] + sv[i] * draws[:, 0]
            nw[i] = w[i] + sw[i] * draws[:, 1]
        return nv, nw

    for k in range(n_cycles):
        mc = sched.commands[k]

        # formation errors measured at the cycle start, against the slot in
        # the master's current body frame
        th_m = pth[:, :1]
        cm = np.cos(th_m)
        sm = np.sin(th_m)
        dsx = cm * cx + sm * cy
        dsy = -sm * cx + cm * cy
        dxw = px[:, 1:] - px[:, :1]
        dyw = py[:, 1:] - py[:, :1]
        ex = cm * dxw + sm * dyw - dsx
        ey = -sm * dxw + cm * dyw - dsy
        eth = _wrap_array(pth[:, 1:] - th_m - dth)
        errors[k, :, :, 0] = ex
        errors[k, :, :, 1] = ey
        errors[k, :, :, 2] = eth

        if use_dem:
            # slot at the cycle end, per the master's planned heading change
            th_end = th_m + (prev_master.omega * hold_t + mc.omega * hit_t)
            ce = np.cos(th_end)
            se = np.sin(th_end)
            dex = ce * cx + se * cy
            dey = -se * cx + ce * cy
            batch = _DemBatch(
                ex, ey, eth, dsx, dsy, dth,
                exec_v, exec_w, mc.v, mc.omega, prev_master.v, prev_master.omega,
                config.dem, timing,
                dx2=dex, dy2=dey, dth2=dth,
            )
            cmd_v, cmd_w = batch.solve(config.solver_points, config.solver_refinements)
        else:
            cmd_v, cmd_w = baseline_arrays(
                ex, ey, eth, mc.v, mc.omega,
                k_pos, k_theta, config.dem.v_max, config.dem.omega_max,
            )

        delivered = np.empty((n_runs, n_slaves), dtype=bool)
        for i, g in enumerate(rngs):
            delivered[i] = g.random(n_slaves) < p_true
        delivered_all[k] = delivered

        act_v = np.where(delivered, cmd_v, exec_v)
        act_w = np.where(delivered, cmd_w, exec_w)

        if hold_t > 0.0:
            seg_v = np.concatenate([np.full((n_runs, 1), prev_master.v), exec_v], axis=1)
            seg_w = np.concatenate(
                [np.full((n_runs, 1), prev_master.omega), exec_w], axis=1
            )
            if noise_on:
                seg_v, seg_w = perturb(seg_v, seg_w)
            px, py, pth = _step_arrays(px, py, pth, seg_v, seg_w, hold_t)

        seg_v = np.concatenate([np.full((n_runs, 1), mc.v), act_v], axis=1)
        seg_w = np.concatenate([np.full((n_runs, 1), mc.omega), act_w], axis=1)
        if noise_on:
            seg_v, seg_w = perturb(seg_v, seg_w)
        px, py, pth = _step_arrays(px, py, pth, seg_v, seg_w, hit_t)

        exec_v, exec_w = act_v, act_w
        prev_master = mc

    traces = []
    for i, r in enumerate(run_indices):
        err = errors[:, i].copy()
        dlv = delivered_all[:, i].copy()
        err.flags.writeable = False
        dlv.flags.writeable = False
        traces.append(RunTrace(r, config.seed, err, dlv))
    return traces
