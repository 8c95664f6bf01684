"""Percentile-method intervals and median-based evaluation.

Quantiles use linear interpolation between order statistics (``numpy``'s
``"linear"`` method, Hyndman-Fan type 7): with sorted samples ``x`` and
``h = (n - 1) * p``, the quantile is ``x[floor(h)] + (h - floor(h)) *
(x[floor(h) + 1] - x[floor(h)])``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InvalidInput, UndefinedCorrelation
from .metrics import EceConfig, ece_from_coverage, pearson
from .types import ConfidenceInterval

NONPARAMETRIC_ECE = EceConfig(n_bins=20)


def _samples(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InvalidInput("empty sample set")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("samples must be finite")
    return arr


def median(samples: Sequence[float]) -> float:
    return float(np.median(_samples(samples)))


def percentile_interval(samples: Sequence[float], gamma: float) -> ConfidenceInterval:
    """Empirical quantiles at ``(1 - gamma) / 2`` and ``(1 + gamma) / 2``."""
    if not 0.0 < gamma < 1.0:
        raise InvalidInput(f"gamma must lie in (0, 1), got {gamma}")
    arr = _samples(samples)
    lo, hi = np.quantile(arr, [(1.0 - gamma) / 2.0, (1.0 + gamma) / 2.0], method="linear")
    return ConfidenceInterval(gamma, float(lo), float(hi))


def _matrix(sample_sets) -> np.ndarray:
    try:
        arr = np.asarray(sample_sets, dtype=np.float64)
    except ValueError:
        raise InvalidInput("sample sets must all have the same size") from None
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidInput("expected a nonempty list of equally sized sample sets")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("samples must be finite")
    return arr


def coverage(sample_sets, golds, cfg: EceConfig = NONPARAMETRIC_ECE) -> np.ndarray:
    arr = _matrix(sample_sets)
    g = np.asarray(golds, dtype=np.float64).ravel()
    if g.size != arr.shape[0]:
        raise InvalidInput(f"{arr.shape[0]} sample sets but {g.size} golds")
    gammas = cfg.levels()
    acc = np.empty(gammas.size)
    for i, gamma in enumerate(gammas):
        if gamma >= 1.0:
            lo, hi = arr.min(axis=1), arr.max(axis=1)
        else:
            lo, hi = np.quantile(arr, [(1.0 - gamma) / 2.0, (1.0 + gamma) / 2.0], axis=1, method="linear")
        acc[i] = np.count_nonzero((lo <= g) & (g <= hi)) / g.size
    return acc


def evaluate_nonparametric(
    sample_sets, golds, cfg: EceConfig = NONPARAMETRIC_ECE
) -> tuple[float | None, float]:
    """PPS against per-segment medians and ECE of percentile intervals.

    Returns:
        ``(pps_median, ece)``; ``pps_median`` is ``None`` when the medians
        or golds are constant.
    """
    arr = _matrix(sample_sets)
    g = np.asarray(golds, dtype=np.float64).ravel()
    if g.size != arr.shape[0]:
        raise InvalidInput(f"{arr.shape[0]} sample sets but {g.size} golds")
    try:
        p = pearson(g, np.median(arr, axis=1)) if g.size >= 2 else None
    except UndefinedCorrelation:
        p = None
    e = ece_from_coverage(coverage(arr, g, cfg), cfg.levels())
    return p, e
