"""Dataset-level indicators: PPS, UPS, NLL, ECE and sharpness.

Dataset means use ``math.fsum`` (exactly rounded), so every indicator is
invariant to segment order bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .distribution import DEFAULT_PROBIT, Gaussians, as_batch, probit
from .errors import InvalidInput, UndefinedCorrelation
from .types import EvalReport


class LevelRule(str, Enum):
    centers = "centers"
    right_edges = "right_edges"


@dataclass(frozen=True)
class EceConfig:
    n_bins: int = 100
    level_rule: LevelRule = LevelRule.centers

    def __post_init__(self):
        if self.n_bins < 2:
            raise InvalidInput("ECE needs at least 2 bins")
        object.__setattr__(self, "level_rule", LevelRule(self.level_rule))

    def levels(self) -> np.ndarray:
        return _levels(self.n_bins, self.level_rule)[0]

    def z_levels(self) -> np.ndarray:
        """Standardized half-widths ``probit((1 + g) / 2)`` per level (inf at g = 1)."""
        return _levels(self.n_bins, self.level_rule)[1]


@lru_cache(maxsize=32)
def _levels(n_bins: int, rule: LevelRule) -> tuple[np.ndarray, np.ndarray]:
    b = np.arange(1, n_bins + 1, dtype=np.float64)
    gammas = (b - 0.5) / n_bins if rule is LevelRule.centers else b / n_bins
    z = np.array([math.inf if g >= 1.0 else probit((1.0 + g) / 2.0, DEFAULT_PROBIT) for g in gammas])
    gammas.setflags(write=False)
    z.setflags(write=False)
    return gammas, z


def _golds(golds, n: int) -> np.ndarray:
    g = np.asarray(golds, dtype=np.float64).ravel()
    if g.size != n:
        raise InvalidInput(f"{n} distributions but {g.size} gold scores")
    if n < 1:
        raise InvalidInput("empty dataset")
    if not np.all(np.isfinite(g)):
        raise InvalidInput("gold scores must be finite")
    return g


def mean(values) -> float:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise InvalidInput("mean of an empty sequence")
    m = math.fsum(v.tolist()) / v.size
    # one correction pass makes the mean of identical values exact
    return m + math.fsum((v - m).tolist()) / v.size


def coverage_from_scaled_residuals(t: np.ndarray, z_levels: np.ndarray) -> np.ndarray:
    """Fraction of ``t`` values at or below each level's half-width."""
    ts = np.sort(np.asarray(t, dtype=np.float64))
    return np.searchsorted(ts, z_levels, side="right") / ts.size


def ece_from_coverage(acc: np.ndarray, gammas: np.ndarray) -> float:
    return math.fsum(np.abs(acc - gammas).tolist()) / len(gammas)


def coverage(dists: Gaussians, golds, cfg: EceConfig = EceConfig()) -> np.ndarray:
    """``acc(gamma_b)`` for every confidence level of ``cfg``."""
    b = as_batch(dists)
    g = _golds(golds, len(b))
    t = np.abs(g - b.mu) / np.sqrt(b.sigma2)
    return coverage_from_scaled_residuals(t, cfg.z_levels())


def calibration_gaps(dists: Gaussians, golds, cfg: EceConfig = EceConfig()) -> np.ndarray:
    """Per-level ``|acc(gamma_b) - gamma_b|``; their mean is the ECE."""
    return np.abs(coverage(dists, golds, cfg) - cfg.levels())


def ece(dists: Gaussians, golds, cfg: EceConfig = EceConfig()) -> float:
    """Expected calibration error over ``cfg.n_bins`` confidence levels.

    A gold counts as covered at level ``gamma`` when it lies in the closed
    interval ``mu -/+ sigma * probit((1 + gamma) / 2)``.
    """
    return ece_from_coverage(coverage(dists, golds, cfg), cfg.levels())


def nll(dists: Gaussians, golds) -> float:
    b = as_batch(dists)
    g = _golds(golds, len(b))
    terms = 0.5 * np.log(2.0 * math.pi * b.sigma2) + np.square(g - b.mu) / (2.0 * b.sigma2)
    return mean(terms)


def sharpness(dists: Gaussians) -> float:
    b = as_batch(dists)
    if len(b) == 0:
        raise InvalidInput("sharpness of an empty dataset")
    return mean(b.sigma2)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation; raises :class:`UndefinedCorrelation` on a constant argument."""
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.size != ya.size:
        raise InvalidInput(f"length mismatch: {xa.size} vs {ya.size}")
    if xa.size < 2:
        raise InvalidInput("Pearson correlation needs at least 2 points")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise UndefinedCorrelation("one argument has zero variance")
    dx = xa - mean(xa)
    dy = ya - mean(ya)
    sxy = math.fsum((dx * dy).tolist())
    sxx = math.fsum((dx * dx).tolist())
    syy = math.fsum((dy * dy).tolist())
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("one argument has zero variance")
    r = sxy / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def pps(dists: Gaussians, golds) -> float:
    """Correlation between golds and predicted means (the point estimates, for the baseline)."""
    b = as_batch(dists)
    return pearson(_golds(golds, len(b)), b.mu)


def ups(dists: Gaussians, golds) -> Optional[float]:
    """Correlation between absolute errors and predicted standard deviations.

    Returns ``None`` when the standard deviations are constant, e.g. for the
    fixed-variance baseline; reports render this as ``-``.
    """
    b = as_batch(dists)
    g = _golds(golds, len(b))
    try:
        return pearson(np.abs(g - b.mu), np.sqrt(b.sigma2))
    except UndefinedCorrelation:
        return None


def evaluate(dists: Gaussians, golds, cfg: EceConfig = EceConfig()) -> EvalReport:
    b = as_batch(dists)
    g = _golds(golds, len(b))
    try:
        p = pps(b, g)
    except UndefinedCorrelation:
        p = None
    except InvalidInput:
        if len(b) >= 2:
            raise
        p = None
    u = ups(b, g) if len(b) >= 2 else None
    return EvalReport(
        pps=p,
        ups=u,
        nll=nll(b, g),
        ece=ece(b, g, cfg),
        sharpness=sharpness(b),
        n_segments=len(b),
    )


def mean_report(reports: Sequence[EvalReport]) -> EvalReport:
    """Unweighted mean of per-fold reports; an absent indicator stays absent if any fold lacks it."""
    if not reports:
        raise InvalidInput("no reports to average")

    def avg(name):
        vals = [getattr(r, name) for r in reports]
        if any(v is None for v in vals):
            return None
        return math.fsum(vals) / len(vals)

    return EvalReport(
        pps=avg("pps"),
        ups=avg("ups"),
        nll=avg("nll"),
        ece=avg("ece"),
        sharpness=avg("sharpness"),
        n_segments=sum(r.n_segments for r in reports),
    )
