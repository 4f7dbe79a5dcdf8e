"""Histogram and moment summaries of measurement vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MeasurementStats:
    counts: np.ndarray
    edges: np.ndarray
    mean: float
    std: float
    skewness: float
    excess_kurtosis: float
    degenerate: bool
    # central interval holding 99% of the values (after centring)
    bulk_low: float
    bulk_high: float


def measurement_histogram(y, bins: int = 100, limit: float | None = None) -> MeasurementStats:
    """Counts over a symmetric range and the first four standardised moments.

    ``limit`` sets the half-width of the histogram range (default: max |y|).
    For constant input ``std`` is 0, the higher moments are NaN and
    ``degenerate`` is set.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size < 2:
        raise ValueError("need at least two values")
    if not np.all(np.isfinite(y)):
        raise ValueError("values must be finite")
    if bins < 1:
        raise ValueError("bins must be positive")
    mean = float(y.mean())
    d = y - mean
    var = float(np.mean(d * d))
    std = var ** 0.5
    degenerate = std == 0.0
    if degenerate:
        skew = kurt = float("nan")
    else:
        z = d / std
        skew = float(np.mean(z**3))
        kurt = float(np.mean(z**4)) - 3.0
    half = float(np.abs(y).max()) if limit is None else float(limit)
    if half == 0.0:
        half = 1.0
    counts, edges = np.histogram(y, bins=bins, range=(-half, half))
    lo, hi = np.quantile(d, [0.005, 0.995])
    return MeasurementStats(counts, edges, mean, std, skew, kurt, degenerate, float(lo), float(hi))
