"""Communication-control cycle with deadline-gated command switching.

Commands computed at the start of cycle t are transmitted to the slaves and
take effect simultaneously on every robot at t + d*T, where d is the deadline
fraction of the cycle. Until then each robot continues its previous command
(the hold). A command that misses the deadline is discarded, never executed
late, and the slave simply keeps holding its previous command for the rest of
the cycle. Delivery is a single Bernoulli outcome per slave per cycle;
MAC-layer retransmissions are folded into that probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import VelocityCommand, ZERO_COMMAND


@dataclass(frozen=True)
class LinkModel:
    """Probability that a slave's command arrives before the switch deadline.

    Independent across slaves and cycles.
    """

    p_true: float

    def __post_init__(self):
        if not (math.isfinite(self.p_true) and 0.0 <= self.p_true <= 1.0):
            raise ValueError(f"p_true must be in [0, 1], got {self.p_true!r}")


@dataclass(frozen=True)
class CycleTiming:
    """Control cycle duration T (seconds) and switch fraction d in [0, 1)."""

    T: float
    d: float

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0.0):
            raise ValueError(f"cycle duration T must be > 0, got {self.T!r}")
        if not (math.isfinite(self.d) and 0.0 <= self.d < 1.0):
            raise ValueError(f"switch fraction d must be in [0, 1), got {self.d!r}")

    @property
    def hold_duration(self) -> float:
        """Length of the pre-switch segment [t, t + d*T)."""
        return self.d * self.T

    @property
    def hit_duration(self) -> float:
        """Length of the post-switch segment [t + d*T, t + T)."""
        return (1.0 - self.d) * self.T


@dataclass(frozen=True)
class Segment:
    """One constant-command stretch of a cycle's execution plan."""

    cmd: VelocityCommand
    duration: float


ExecutionPlan = tuple[Segment, ...]


@dataclass(frozen=True)
class ProtocolState:
    """Per-slave command bookkeeping across cycles.

    executing[i] is the command slave i runs right now (the hold fallback);
    pending[i] records the command delivered this cycle, or None on loss.
    """

    executing: tuple[VelocityCommand, ...]
    pending: tuple[VelocityCommand | None, ...]
    cycle_index: int

    @classmethod
    def initial(cls, n_slaves: int) -> "ProtocolState":
        if n_slaves < 1:
            raise ValueError("need at least one slave")
        return cls(
            executing=(ZERO_COMMAND,) * n_slaves,
            pending=(None,) * n_slaves,
            cycle_index=0,
        )

    @property
    def n_slaves(self) -> int:
        return len(self.executing)


def two_segment_plan(
    prev_cmd: VelocityCommand, active_cmd: VelocityCommand, timing: CycleTiming
) -> ExecutionPlan:
    """Execution plan for one cycle: hold prev_cmd until the switch, then run active_cmd.

    With d = 0 the hold segment is empty and the plan has a single segment.
    The same timing applies to every robot, master included, which is what
    keeps the fleet's command switches synchronized.
    """
    segments = []
    if timing.hold_duration > 0.0:
        segments.append(Segment(prev_cmd, timing.hold_duration))
    segments.append(Segment(active_cmd, timing.hit_duration))
    return tuple(segments)


def sample_delivery(
    link: LinkModel, n_slaves: int, rng: np.random.Generator
) -> list[bool]:
    """One Bernoulli(p_true) delivery outcome per slave; True means on time."""
    return [bool(u < link.p_true) for u in rng.random(n_slaves)]


def advance_cycle(
    state: ProtocolState,
    new_cmds: list[VelocityCommand] | tuple[VelocityCommand, ...],
    delivered: list[bool] | tuple[bool, ...],
    timing: CycleTiming,
) -> tuple[ProtocolState, tuple[ExecutionPlan, ...]]:
    """Advance the protocol by one cycle.

    Returns the next state and, per slave, the cycle's two-segment plan:
    the previous executing command until t + d*T, then the newly delivered
    command, or the previous one again when delivery failed. All randomness
    lives in sample_delivery; this function is deterministic.
    """
    n = state.n_slaves
    if len(new_cmds) != n or len(delivered) != n:
        raise ValueError(
            f"expected {n} commands and delivery flags, "
            f"got {len(new_cmds)} and {len(delivered)}"
        )
    actives = tuple(
        new_cmds[i] if delivered[i] else state.executing[i] for i in range(n)
    )
    plans = tuple(
        two_segment_plan(state.executing[i], actives[i], timing) for i in range(n)
    )
    next_state = ProtocolState(
        executing=actives,
        pending=tuple(new_cmds[i] if delivered[i] else None for i in range(n)),
        cycle_index=state.cycle_index + 1,
    )
    return next_state, plans
