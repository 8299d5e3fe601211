"""Command-line batch runner: build a group, run seeded batches, write artifacts.

Outputs per invocation: one trace CSV per configuration, one summary JSON for
the group, and a manifest JSON recording the fully resolved configuration.
Identical invocations produce byte-identical CSVs and summaries; the manifest
differs only in its generated_at field.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .metrics import selected_cycles, summarize
from .scenario import (
    GROUP_NAMES,
    ExperimentConfig,
    build_group,
    make_config,
    run_batch,
)

CSV_HEADER = "run,cycle,slave,ex_m,ey_m,etheta_rad,pos_err_m,ang_err_deg,delivered"

SEED_ENV_VAR = "FORMATION_SIM_SEED"


class ConfigError(Exception):
    """Invalid configuration; carries the offending key for the error message."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_int_list(raw: str) -> tuple[int, ...]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    return tuple(int(s) for s in items)


# (section, key) -> (converter, make_config kwarg or run-level name)
FILE_SCHEMA = {
    ("run", "seed"): (int, "seed"),
    ("run", "runs"): (int, "runs"),
    ("run", "parallelism"): (int, "parallelism"),
    ("run", "controller"): (str, "controller"),
    ("schedule", "v"): (float, "v"),
    ("schedule", "T"): (float, "T"),
    ("schedule", "path_length"): (float, "path_length"),
    ("schedule", "shape"): (str, "shape"),
    ("schedule", "ramp_fraction"): (float, "ramp_fraction"),
    ("schedule", "period_fraction"): (float, "period_fraction"),
    ("schedule", "alternate_periods"): (_parse_bool, "alternate_periods"),
    ("formation", "side"): (float, "side"),
    ("link", "p_true"): (float, "p_true"),
    ("dem", "p_assumed"): (float, "p_assumed"),
    ("dem", "rho"): (float, "rho"),
    ("dem", "w_x"): (float, "w_x"),
    ("dem", "w_y"): (float, "w_y"),
    ("dem", "w_theta"): (float, "w_theta"),
    ("dem", "clamp_factor"): (float, "clamp_factor"),
    ("dem", "command_smoothing"): (float, "command_smoothing"),
    ("timing", "d"): (float, "d"),
    ("noise", "enabled"): (_parse_bool, "noise_enabled"),
    ("solver", "points"): (int, "solver_points"),
    ("solver", "refinements"): (int, "solver_refinements"),
    ("baseline", "k_pos"): (float, "k_pos"),
    ("baseline", "k_theta"): (float, "k_theta"),
    ("metrics", "selected_cycles"): (_parse_int_list, "selected_cycles"),
}


def load_config_file(path: str) -> dict:
    """Parse the flat-sectioned key-value config file into named settings."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case sensitive (T vs t)
    read = parser.read(path)
    if not read:
        raise ConfigError("config", f"cannot read config file {path!r}")
    settings = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            spec = FILE_SCHEMA.get((section, key))
            if spec is None:
                raise ConfigError(f"[{section}] {key}", "unknown key")
            convert, name = spec
            try:
                settings[name] = convert(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}", str(exc)) from exc
    return settings


def _resolve_seed(flag_seed, file_settings) -> int:
    if flag_seed is not None:
        return flag_seed
    if "seed" in file_settings:
        return file_settings["seed"]
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(SEED_ENV_VAR, f"not an integer: {env!r}") from exc
    return 0


def build_configs(group: str, settings: dict) -> list[ExperimentConfig]:
    """Instantiate the experiment configurations for a group plus overrides."""
    overrides = dict(settings)
    overrides.pop("parallelism", None)
    # merge split keys into make_config's tuple arguments
    if any(k in overrides for k in ("w_x", "w_y", "w_theta")):
        overrides["weights"] = (
            overrides.pop("w_x", 1.0),
            overrides.pop("w_y", 1.0),
            overrides.pop("w_theta", 1.0),
        )
    if any(k in overrides for k in ("k_pos", "k_theta")):
        overrides["baseline_gains"] = (
            overrides.pop("k_pos", 2.0),
            overrides.pop("k_theta", 1.0),
        )
    try:
        if group == "custom":
            configs = [make_config("custom", **overrides)]
        else:
            configs = build_group(group, **overrides)
    except (ValueError, TypeError) as exc:
        raise ConfigError(group, str(exc)) from exc
    for cfg in configs:
        if cfg.selected_cycles is not None:
            for c in cfg.selected_cycles:
                if not 0 <= c < cfg.schedule.total_cycles:
                    raise ConfigError(
                        "[metrics] selected_cycles",
                        f"cycle {c} outside [0, {cfg.schedule.total_cycles}) "
                        f"for {cfg.label}",
                    )
    return configs


def config_payload(cfg: ExperimentConfig, resolved_cycles) -> dict:
    sched = cfg.schedule
    return {
        "label": cfg.label,
        "controller": cfg.controller,
        "runs": cfg.runs,
        "seed": cfg.seed,
        "v_m": sched.commands[0].v,
        "T": sched.T,
        "total_cycles": sched.total_cycles,
        "period_cycles": sched.period_cycles,
        "path_length": cfg.path_length,
        "formation": [[p.x, p.y, p.theta] for p in cfg.formation.desired],
        "p_true": cfg.link.p_true,
        "p_assumed": cfg.dem.p_assumed,
        "rho": cfg.dem.rho,
        "weights": [cfg.dem.weights.wx, cfg.dem.weights.wy, cfg.dem.weights.wtheta],
        "d": cfg.timing.d,
        "v_max": cfg.dem.v_max,
        "omega_max": cfg.dem.omega_max,
        "noise_enabled": cfg.noise.enabled,
        "noise_rho": cfg.noise.rho,
        "solver_points": cfg.solver_points,
        "solver_refinements": cfg.solver_refinements,
        "baseline_gains": list(cfg.baseline_gains),
        "selected_cycles": [int(c) for c in resolved_cycles],
    }


def _fmt(x) -> str:
    return format(float(x), ".9g")


def write_trace_csv(path: Path, traces) -> None:
    lines = [CSV_HEADER]
    for t in sorted(traces, key=lambda t: t.run_index):
        pos = t.pos_err()
        ang = t.ang_err_deg()
        err = t.errors
        n_cycles, n_slaves = t.delivered.shape
        for k in range(n_cycles):
            erow = err[k]
            prow = pos[k]
            arow = ang[k]
            drow = t.delivered[k]
            for s in range(n_slaves):
                lines.append(
                    f"{t.run_index},{k},{s + 1},"
                    f"{_fmt(erow[s, 0])},{_fmt(erow[s, 1])},{_fmt(erow[s, 2])},"
                    f"{_fmt(prow[s])},{_fmt(arow[s])},{int(drow[s])}"
                )
    path.write_text("\n".join(lines) + "\n")


def _run_chunk(payload):
    config, chunk = payload
    return run_batch(config, chunk)


def execute_runs(config: ExperimentConfig, parallelism: int):
    """All runs of a config, optionally spread over worker processes.

    Results are keyed by run index, so the trace order is independent of the
    chunking and worker scheduling.
    """
    indices = list(range(config.runs))
    if parallelism <= 1 or config.runs == 1:
        return run_batch(config, indices)
    workers = min(parallelism, config.runs)
    chunk_size = (config.runs + workers - 1) // workers
    chunks = [indices[i : i + chunk_size] for i in range(0, len(indices), chunk_size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [(config, c) for c in chunks]))
    traces = [t for part in parts for t in part]
    return sorted(traces, key=lambda t: t.run_index)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_cli(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="formation-sim",
        description="Run seeded formation-navigation experiment groups.",
    )
    parser.add_argument("--group", choices=list(GROUP_NAMES) + ["custom"])
    parser.add_argument("--config", metavar="PATH", help="INI overrides file")
    parser.add_argument("--out", default="simout", help="output directory")
    parser.add_argument("--seed", type=int, help=f"defaults to ${SEED_ENV_VAR} or 0")
    parser.add_argument("--runs", type=int, help="override the runs per config")
    parser.add_argument("--parallelism", type=int, help="worker processes (default 1)")
    parser.add_argument("--controller", choices=["dem", "baseline"])
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        settings = load_config_file(args.config) if args.config else {}
        group = args.group or ("custom" if args.config else None)
        if group is None:
            raise ConfigError("group", "--group (or --config for custom) is required")
        settings["seed"] = _resolve_seed(args.seed, settings)
        if args.runs is not None:
            if args.runs < 1:
                raise ConfigError("runs", "must be >= 1")
            settings["runs"] = args.runs
        if args.controller is not None:
            settings["controller"] = args.controller
        parallelism = args.parallelism or settings.pop("parallelism", 1)
        if parallelism < 1:
            raise ConfigError("parallelism", "must be >= 1")
        settings.pop("parallelism", None)
        configs = build_configs(group, settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: out dir {out_dir} not writable: {exc}", file=sys.stderr)
        return 3

    summaries = []
    manifest_configs = []
    for cfg in configs:
        traces = execute_runs(cfg, parallelism)
        cycles = (
            list(cfg.selected_cycles)
            if cfg.selected_cycles is not None
            else selected_cycles(cfg.schedule)
        )
        summary = summarize(traces, cycles)
        payload = config_payload(cfg, cycles)
        manifest_configs.append(payload)
        summaries.append({"config": payload, **summary.to_dict()})
        write_trace_csv(out_dir / f"trace_{cfg.label}.csv", traces)

    _write_json(out_dir / f"summary_{group}.json", {"group": group, "configs": summaries})
    _write_json(
        out_dir / f"manifest_{group}.json",
        {
            "group": group,
            "seed": configs[0].seed,
            "runs": configs[0].runs,
            "parallelism": parallelism,
            "controller": configs[0].controller,
            "generated_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "tool_version": __version__,
            "configs": manifest_configs,
        },
    )
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
