"""Command-line entry point for rendering simulator outputs."""

import argparse
import sys

from .render import PlotJob, plot_distributions, plot_traces
from .schema import SchemaError


def run_cli(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="formation-plots",
        description="Render error trajectories and distributions from "
        "formation-sim trace CSV and summary JSON files.",
    )
    parser.add_argument("--trace", required=True,
                        help="trace CSV, or the directory holding trace_*.csv")
    parser.add_argument("--summary", required=True, help="group summary JSON")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--format", choices=["png", "svg"], default="png")
    parser.add_argument("--dpi", type=int, default=120)
    parser.add_argument("--what", choices=["traces", "distributions", "all"],
                        default="all")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        job = PlotJob(args.trace, args.summary, args.out, args.format, args.dpi)
        written = []
        if args.what in ("traces", "all"):
            written += plot_traces(job)
        if args.what in ("distributions", "all"):
            written += [record.path for record in plot_distributions(job)]
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
