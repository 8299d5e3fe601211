"""Reductions of run traces to the reported statistics.

The simulator exports raw per-cycle samples; distribution estimation (KDE)
is left to the plotting tool so presentation choices stay out of the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import MasterSchedule, RunTrace


@dataclass(frozen=True)
class ErrorSample:
    """One (cycle, slave) error record: position magnitude and signed angle.

    pos_err in meters, ang_err in degrees with the sign of the wrapped
    heading error, so it lies in (-180, 180].
    """

    cycle: int
    slave: int
    pos_err: float
    ang_err: float


def trace_samples(trace: RunTrace):
    """Iterate a trace as ErrorSample records (slave ids are 1-based)."""
    pos = trace.pos_err()
    ang = trace.ang_err_deg()
    n_cycles, n_slaves = pos.shape
    for k in range(n_cycles):
        for s in range(n_slaves):
            yield ErrorSample(k, s + 1, float(pos[k, s]), float(ang[k, s]))


def selected_cycles(schedule: MasterSchedule, top_quantile: float = 0.9) -> list[int]:
    """Cycles where the preplanned steering changes the most.

    A cycle qualifies when |delta omega| from the previous cycle is in the
    top decile of all nonzero changes; qualifying cycles are then thinned to
    at most one per half wave period, keeping the largest change (earliest on
    ties). Constant-steering schedules yield an empty list.
    """
    omega = schedule.omega_array()
    if omega.size < 2:
        return []
    dw = np.abs(np.diff(omega))
    nonzero = dw[dw > 0.0]
    if nonzero.size == 0:
        return []
    threshold = float(np.quantile(nonzero, top_quantile))
    qualifying = np.nonzero(dw >= threshold)[0] + 1  # index of the changed cycle
    period = schedule.period_cycles or schedule.total_cycles
    half = max(period // 2, 1)
    best: dict[int, tuple[float, int]] = {}
    for cycle in qualifying:
        bucket = int(cycle) // half
        magnitude = float(dw[cycle - 1])
        if bucket not in best or magnitude > best[bucket][0]:
            best[bucket] = (magnitude, int(cycle))
    return sorted(c for _, c in best.values())


@dataclass(frozen=True)
class ConfigSummary:
    """Cross-run statistics for one experiment configuration.

    samples and means are keyed cycle -> slave id -> metric name, with
    metrics "pos_err_m" and "ang_err_deg"; sample lists are ordered by run
    index.
    """

    max_abs_pos_err_m: float
    max_abs_ang_err_deg: float
    selected_cycles: tuple[int, ...]
    samples: dict[int, dict[int, dict[str, list[float]]]]
    means: dict[int, dict[int, dict[str, float]]]

    def to_dict(self) -> dict:
        return {
            "max_abs_pos_err_m": self.max_abs_pos_err_m,
            "max_abs_ang_err_deg": self.max_abs_ang_err_deg,
            "selected_cycles": list(self.selected_cycles),
            "samples": {
                str(c): {
                    str(s): {m: list(v) for m, v in per.items()}
                    for s, per in by_slave.items()
                }
                for c, by_slave in self.samples.items()
            },
            "means": {
                str(c): {str(s): dict(per) for s, per in by_slave.items()}
                for c, by_slave in self.means.items()
            },
        }


def summarize(traces: list[RunTrace], cycles) -> ConfigSummary:
    """Maxima over all samples plus raw cross-run samples at selected cycles.

    Order-insensitive over traces: runs are sorted by their index before the
    sample lists are built.
    """
    if not traces:
        raise ValueError("need at least one trace")
    ordered = sorted(traces, key=lambda t: t.run_index)
    shape = ordered[0].errors.shape
    for t in ordered:
        if t.errors.shape != shape:
            raise ValueError(
                f"trace shape mismatch: {t.errors.shape} vs {shape}"
            )
    cycles = [int(c) for c in cycles]
    n_cycles, n_slaves = shape[0], shape[1]
    for c in cycles:
        if not (0 <= c < n_cycles):
            raise ValueError(f"selected cycle {c} outside [0, {n_cycles})")

    pos = np.stack([t.pos_err() for t in ordered])  # (runs, cycles, slaves)
    ang = np.stack([t.ang_err_deg() for t in ordered])
    samples: dict[int, dict[int, dict[str, list[float]]]] = {}
    means: dict[int, dict[int, dict[str, float]]] = {}
    for c in cycles:
        samples[c] = {}
        means[c] = {}
        for s in range(n_slaves):
            pos_list = [float(x) for x in pos[:, c, s]]
            ang_list = [float(x) for x in ang[:, c, s]]
            samples[c][s + 1] = {"pos_err_m": pos_list, "ang_err_deg": ang_list}
            means[c][s + 1] = {
                "pos_err_m": float(np.mean(pos[:, c, s])),
                "ang_err_deg": float(np.mean(ang[:, c, s])),
            }
    return ConfigSummary(
        max_abs_pos_err_m=float(np.max(pos)),
        max_abs_ang_err_deg=float(np.max(np.abs(ang))),
        selected_cycles=tuple(cycles),
        samples=samples,
        means=means,
    )
