"""Figure rendering: per-slave error trajectories and error distributions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError, read_summary, read_trace

KDE_BANDWIDTH_FLOOR = 1e-6
MIN_KDE_SAMPLES = 5


@dataclass(frozen=True)
class PlotJob:
    """One rendering task: a trace CSV (or its directory) plus the group summary."""

    trace: Path
    summary: Path
    out_dir: Path
    fmt: str = "png"
    dpi: int = 120

    def __post_init__(self):
        object.__setattr__(self, "trace", Path(self.trace))
        object.__setattr__(self, "summary", Path(self.summary))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.fmt not in ("png", "svg"):
            raise ValueError(f"unsupported format {self.fmt!r}")


@dataclass
class DistributionFigure:
    """Where one distribution figure went and the mean markers it drew."""

    path: Path
    label: str
    cycle: int
    mean_markers: dict


def kde_curve(samples, bandwidth=None, points=256):
    """Gaussian kernel density estimate with a Scott's-rule bandwidth.

    The bandwidth is floored so identical samples produce a narrow spike
    instead of a degenerate zero-width kernel.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n == 0:
        raise ValueError("need at least one sample")
    if bandwidth is None:
        spread = samples.std(ddof=1) if n > 1 else 0.0
        bandwidth = spread * n ** (-1.0 / 5.0)
    bandwidth = max(float(bandwidth), KDE_BANDWIDTH_FLOOR)
    xs = np.linspace(samples.min() - 3 * bandwidth, samples.max() + 3 * bandwidth, points)
    z = (xs[:, None] - samples[None, :]) / bandwidth
    density = np.exp(-0.5 * z * z).sum(axis=1) / (n * bandwidth * np.sqrt(2 * np.pi))
    return xs, density


def _configs_for_job(job):
    """Pair each summary config with its trace CSV path."""
    summary = read_summary(job.summary)
    trace_dir = job.trace if job.trace.is_dir() else job.trace.parent
    selected = []
    for entry in summary["configs"]:
        label = entry["config"]["label"]
        csv_path = trace_dir / f"trace_{label}.csv"
        if job.trace.is_dir() or csv_path == job.trace:
            selected.append((label, entry, csv_path))
    if not selected:
        raise SchemaError(
            f"{job.trace.name} does not match any config in {job.summary.name}"
        )
    return selected


def plot_traces(job: PlotJob) -> list[Path]:
    """One figure per configuration: error trajectories of the first run.

    Two stacked axes (position error in meters, orientation error in
    degrees) against the control cycle, one line per slave, dashed vertical
    lines at the selected cycles.
    """
    job.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for label, entry, csv_path in _configs_for_job(job):
        trace = read_trace(csv_path)
        run0 = trace["run"] == trace["run"].min()
        slaves = np.unique(trace["slave"][run0]).astype(int)
        fig, (ax_pos, ax_ang) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
        for slave in slaves:
            rows = run0 & (trace["slave"] == slave)
            cycles = trace["cycle"][rows]
            order = np.argsort(cycles)
            ax_pos.plot(cycles[order], trace["pos_err_m"][rows][order],
                        label=f"slave {slave}", linewidth=0.9)
            ax_ang.plot(cycles[order], trace["ang_err_deg"][rows][order],
                        linewidth=0.9)
        for cycle in entry["selected_cycles"]:
            for ax in (ax_pos, ax_ang):
                ax.axvline(cycle, linestyle="--", color="0.4", linewidth=0.8)
        ax_pos.set_ylabel("position error [m]")
        ax_ang.set_ylabel("orientation error [deg]")
        ax_ang.set_xlabel("control cycle")
        ax_pos.legend(loc="upper right", fontsize=8)
        ax_pos.set_title(label)
        fig.tight_layout()
        out = job.out_dir / f"traces_{label}.{job.fmt}"
        fig.savefig(out, dpi=job.dpi)
        plt.close(fig)
        written.append(out)
    return written


def _draw_distribution(ax, values, mean, unit):
    if len(values) < MIN_KDE_SAMPLES:
        warnings.warn(
            f"only {len(values)} samples at this cycle; drawing a rug instead of a KDE",
            stacklevel=2,
        )
        ax.plot(values, np.zeros(len(values)), "|", markersize=14)
    else:
        xs, density = kde_curve(values)
        ax.plot(xs, density, linewidth=0.9)
        ax.fill_between(xs, density, alpha=0.15)
    ax.axvline(mean, linestyle=":", color="k", linewidth=1.0)
    ax.set_xlabel(unit)


def plot_distributions(job: PlotJob) -> list[DistributionFigure]:
    """One figure per selected cycle per configuration.

    Each figure holds the cross-run error distributions per slave (position
    and orientation) with dotted mean markers; the final selected cycle gets
    an extra zoomed pair of panels around the means.
    """
    job.out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for label, entry, _ in _configs_for_job(job):
        cycles = [str(c) for c in entry["selected_cycles"]]
        for idx, cycle_key in enumerate(cycles):
            by_slave = entry["samples"][cycle_key]
            means = entry["means"][cycle_key]
            final = idx == len(cycles) - 1
            n_rows = 2 if final else 1
            fig, axes = plt.subplots(
                n_rows, 2, figsize=(8, 3 * n_rows), squeeze=False
            )
            markers = {}
            for slave in sorted(by_slave, key=int):
                pos = by_slave[slave]["pos_err_m"]
                ang = by_slave[slave]["ang_err_deg"]
                mean_pos = means[slave]["pos_err_m"]
                mean_ang = means[slave]["ang_err_deg"]
                markers[slave] = {"pos_err_m": mean_pos, "ang_err_deg": mean_ang}
                _draw_distribution(axes[0][0], pos, mean_pos, "position error [m]")
                _draw_distribution(axes[0][1], ang, mean_ang, "orientation error [deg]")
                if final:
                    _zoomed(axes[1][0], pos, mean_pos, "position error [m] (zoom)")
                    _zoomed(axes[1][1], ang, mean_ang, "orientation error [deg] (zoom)")
            fig.suptitle(f"{label}: cycle {cycle_key}", fontsize=10)
            fig.tight_layout()
            out = job.out_dir / f"dist_{label}_cycle{cycle_key}.{job.fmt}"
            fig.savefig(out, dpi=job.dpi)
            plt.close(fig)
            records.append(
                DistributionFigure(out, label, int(cycle_key), markers)
            )
    return records


def _zoomed(ax, values, mean, unit):
    values = np.asarray(values, dtype=float)
    spread = max(values.std(ddof=1) if values.size > 1 else 0.0, KDE_BANDWIDTH_FLOOR)
    if values.size >= MIN_KDE_SAMPLES:
        xs, density = kde_curve(values)
        ax.plot(xs, density, linewidth=0.9)
    else:
        ax.plot(values, np.zeros(values.size), "|", markersize=14)
    ax.axvline(mean, linestyle=":", color="k", linewidth=1.0)
    ax.set_xlim(mean - 3 * spread, mean + 3 * spread)
    ax.set_xlabel(unit)
