from .data import BuildRow, RunRow, read_build_csv, read_run_csv
from .pareto import pareto_frontier
from .plots import PlotSpec, min_max_normalize, render_index_scatter, render_qps_recall

__version__ = "0.1.0"

__all__ = [
    "BuildRow",
    "PlotSpec",
    "RunRow",
    "min_max_normalize",
    "pareto_frontier",
    "read_build_csv",
    "read_run_csv",
    "render_index_scatter",
    "render_qps_recall",
]
