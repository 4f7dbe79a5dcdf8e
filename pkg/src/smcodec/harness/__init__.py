"""Image I/O, statistics, sweeps and the command-line interface."""

from .pgm import bundled_image, load_pgm, resolve_image, save_pgm
from .stats import measurement_histogram
from .sweep import ExperimentSpec, ResultRow, run_sweep

__all__ = ["bundled_image", "load_pgm", "resolve_image", "save_pgm", "measurement_histogram",
           "ExperimentSpec", "ResultRow", "run_sweep"]
