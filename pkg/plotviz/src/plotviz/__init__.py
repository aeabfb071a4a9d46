"""Learning-curve plots with 95% confidence bands from run CSVs."""

from .aggregate import (
    CSV_HEADER,
    CurveSeries,
    SchemaError,
    SeedRun,
    aggregate,
    baseline_reward,
    build_series,
    load_directory,
    read_run_csv,
)
from .render import Y_LIMITS, draw, render

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "CurveSeries",
    "SchemaError",
    "SeedRun",
    "Y_LIMITS",
    "aggregate",
    "baseline_reward",
    "build_series",
    "draw",
    "load_directory",
    "read_run_csv",
    "render",
    "__version__",
]
