"""A desk-scale experiment sweep, end to end.

Runs the known-delivery-probability robustness group at a reduced path length
and run count, then prints the statistics the full study reports: maxima over
all runs and the cross-run error means at the sharpest turns.
"""

import numpy as np

from formation_sim import build_group, run_batch, selected_cycles, summarize

RUNS = 10
configs = build_group("rob1", runs=RUNS, seed=7, path_length=4.0)

print(f"{'config':12s} {'p':>4s} {'cycles':>6s} {'max pos [m]':>12s} "
      f"{'max |ang| [deg]':>16s} {'mean pos @turns':>16s}")
for config in configs:
    traces = run_batch(config, range(RUNS))
    cycles = selected_cycles(config.schedule)
    summary = summarize(traces, cycles)
    pooled = np.concatenate([
        summary.samples[c][s]["pos_err_m"]
        for c in summary.samples for s in summary.samples[c]
    ])
    print(f"{config.label:12s} {config.link.p_true:4.1f} "
          f"{config.schedule.total_cycles:6d} {summary.max_abs_pos_err_m:12.4f} "
          f"{summary.max_abs_ang_err_deg:16.2f} {pooled.mean():16.5f}")

print()
print("worse links leave slaves holding stale commands for longer, so the")
print("errors at the sharpest turns grow as the delivery probability drops,")
print("while the per-cycle re-optimization keeps every run bounded")
