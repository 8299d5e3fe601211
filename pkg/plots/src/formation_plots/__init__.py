"""Figure rendering for the formation simulator's CSV/JSON outputs."""

from .render import DistributionFigure, PlotJob, kde_curve, plot_distributions, plot_traces
from .schema import SchemaError, read_summary, read_trace

__version__ = "0.1.0"

__all__ = [
    "DistributionFigure",
    "PlotJob",
    "kde_curve",
    "plot_distributions",
    "plot_traces",
    "SchemaError",
    "read_summary",
    "read_trace",
    "__version__",
]
