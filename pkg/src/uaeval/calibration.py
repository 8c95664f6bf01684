"""Validation-set standardization and affine variance recalibration.

The recalibrated variance is ``alpha * sigma2 + beta``. ECE is piecewise
constant in ``(alpha, beta)``, so the two scalars are found by a coarse
grid search followed by local refinement rather than by gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distribution import GaussianBatch, Gaussians, as_batch
from .errors import DegenerateDistribution, DegenerateInput, InvalidInput, NoFeasibleCalibration
from .metrics import EceConfig, mean
from .types import CalibrationParams, QualityGaussian


def _default_alpha_grid() -> tuple[float, ...]:
    return tuple(np.logspace(-2.0, 2.0, 50).tolist())


def _default_beta_grid() -> tuple[float, ...]:
    return tuple(np.linspace(0.0, 2.0, 50).tolist())


@dataclass(frozen=True)
class CalibrationSearchConfig:
    alpha_grid: tuple[float, ...] = field(default_factory=_default_alpha_grid)
    beta_grid: tuple[float, ...] = field(default_factory=_default_beta_grid)
    refine_rounds: int = 2
    ece_bins: int = 100
    shrink: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in self.beta_grid))
        if not self.alpha_grid or not self.beta_grid:
            raise InvalidInput("calibration grids must be nonempty")
        if any(not (math.isfinite(a) and a > 0) for a in self.alpha_grid):
            raise InvalidInput("alpha grid values must be positive")
        if any(not (math.isfinite(b) and b >= 0) for b in self.beta_grid):
            raise InvalidInput("beta grid values must be >= 0")
        if self.refine_rounds < 0:
            raise InvalidInput("refine_rounds must be >= 0")
        if self.shrink <= 1:
            raise InvalidInput("shrink factor must exceed 1")


def fit_standardizer(validation_golds: Sequence[float], validation_means: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation of the validation golds.

    The same map is later applied to golds and predicted means, so
    predicted variances scale by ``1 / std_scale**2``.
    """
    g = np.asarray(validation_golds, dtype=np.float64).ravel()
    m = np.asarray(validation_means, dtype=np.float64).ravel()
    if g.size == 0:
        raise InvalidInput("empty validation set")
    if g.size != m.size:
        raise InvalidInput(f"{g.size} golds but {m.size} predicted means")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(m))):
        raise InvalidInput("validation values must be finite")
    if np.all(g == g[0]):
        raise DegenerateInput("validation golds have zero variance")
    std_mean = mean(g)
    std_scale = math.sqrt(mean(np.square(g - std_mean)))
    if std_scale == 0.0:
        raise DegenerateInput("validation golds have zero variance")
    return std_mean, std_scale


def standardize(values, std_mean: float, std_scale: float) -> np.ndarray:
    return (np.asarray(values, dtype=np.float64) - std_mean) / std_scale


def standardize_dists(dists: Gaussians, std_mean: float, std_scale: float) -> GaussianBatch:
    b = as_batch(dists)
    return GaussianBatch((b.mu - std_mean) / std_scale, b.sigma2 / (std_scale * std_scale))


def _as_triples(validation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(validation, tuple) and len(validation) == 3 and np.ndim(validation[0]) == 1:
        mu, s2, g = (np.asarray(v, dtype=np.float64) for v in validation)
    else:
        rows = list(validation)
        if not rows:
            raise InvalidInput("empty validation set")
        mu, s2, g = (np.asarray(col, dtype=np.float64) for col in zip(*rows))
    if mu.size == 0:
        raise InvalidInput("empty validation set")
    if not (mu.size == s2.size == g.size):
        raise InvalidInput("validation columns differ in length")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(s2)) and np.all(np.isfinite(g))):
        raise InvalidInput("validation values must be finite")
    if np.any(s2 <= 0):
        raise InvalidInput("validation sigma2 must be > 0 everywhere")
    return mu, s2, g


_CHUNK_ELEMENTS = 1 << 20


class _Objective:
    """ECE of the transformed validation set for blocks of candidates.

    Coverage counts are exact integers: a segment is covered at level ``b``
    iff ``|g - mu| / sqrt(var) <= z_b``, the same comparison :func:`metrics.ece`
    makes, so re-evaluating a returned candidate reproduces its ECE bit for bit.
    """

    def __init__(self, mu, s2, g, n_bins: int):
        cfg = EceConfig(n_bins=n_bins)
        self.gammas = cfg.levels()
        self.z = cfg.z_levels()
        self.abs_err = np.abs(g - mu)
        self.s2 = s2
        self.mean_s2 = mean(s2)
        self.s2_min, self.s2_max = float(s2.min()), float(s2.max())
        self._build_table()

    def _build_table(self, cells_per_unit: int = 4096) -> None:
        # Bucket t on a uniform grid fine enough that each cell straddles at
        # most one level; a single exact comparison then settles the index.
        finite = self.z[np.isfinite(self.z)]
        top = float(finite[-1]) if finite.size else 0.0
        self._scale = float(cells_per_unit)
        self._n_cells = int(math.ceil(top * self._scale)) + 2
        edges = np.arange(self._n_cells + 1) / self._scale
        self._lo = np.searchsorted(self.z, edges, side="left")
        gaps = np.diff(finite) if finite.size > 1 else np.array([np.inf])
        if gaps.size and gaps.min() * self._scale <= 1.0:
            self._table = False
        else:
            self._table = True
            self._z_pad = np.append(self.z, np.inf)

    def _first_covering(self, t: np.ndarray) -> np.ndarray:
        """``np.searchsorted(self.z, t, side="left")`` for ``t >= 0``."""
        if not self._table:
            return np.searchsorted(self.z, t, side="left")
        cell = np.minimum(t * self._scale, self._n_cells - 1).astype(np.int64)
        lo = self._lo[cell]
        return lo + (self._z_pad[lo] < t)

    def keys(self, alphas, betas) -> list[Optional[tuple[float, float, float, float]]]:
        """Sort keys for the cartesian product ``alphas x betas`` (alpha-major).

        Infeasible candidates map to ``None``.
        """
        alphas = np.asarray(alphas, dtype=np.float64)
        betas = np.asarray(betas, dtype=np.float64)
        cand_a = np.repeat(alphas, betas.size)
        cand_b = np.tile(betas, alphas.size)
        n, m = self.s2.size, self.z.size
        step = max(1, _CHUNK_ELEMENTS // n)
        out: list = []
        for lo in range(0, cand_a.size, step):
            a, b = cand_a[lo : lo + step], cand_b[lo : lo + step]
            # alpha > 0, so the variance is monotone in s2 and its extremes
            # decide feasibility for the whole row
            feasible = (a * self.s2_min + b > 0) & np.isfinite(a * self.s2_max + b)
            var = a[:, None] * self.s2[None, :] + b[:, None]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                t = self.abs_err[None, :] / np.sqrt(var)
            if not feasible.all():
                t[~feasible] = 0.0
            first = self._first_covering(t.ravel())
            first += np.repeat(np.arange(a.size) * (m + 1), n)
            hist = np.bincount(first, minlength=a.size * (m + 1)).reshape(a.size, m + 1)
            gaps = np.abs(np.cumsum(hist[:, :m], axis=1) / n - self.gammas)
            for ok, row, ai, bi in zip(feasible.tolist(), gaps.tolist(), a.tolist(), b.tolist()):
                if ok:
                    out.append((math.fsum(row) / m, ai * self.mean_s2 + bi, bi, ai))
                else:
                    out.append(None)
        return out


def _search(obj: _Objective, alphas, betas, best):
    for k in obj.keys(alphas, betas):
        if k is not None and (best is None or k < best):
            best = k
    return best


def tune_affine(
    validation,
    cfg: CalibrationSearchConfig = CalibrationSearchConfig(),
    std_mean: float = 0.0,
    std_scale: float = 1.0,
) -> CalibrationParams:
    """Pick ``(alpha, beta)`` minimizing validation ECE.

    Args:
        validation: iterable of ``(mu, sigma2, gold)`` triples, or a tuple of
            three equal-length arrays, already standardized.
        cfg: search grids and refinement schedule.
        std_mean, std_scale: standardization used upstream, copied into the
            returned parameters.

    Each refinement round re-grids a window ``shrink`` times narrower
    (log-scale for alpha, linear for beta, beta clipped at 0) around the
    incumbent. Ties in ECE go to the smaller mean calibrated variance, then
    the smaller beta, then the smaller alpha, so the result does not depend
    on the order in which candidates are evaluated.
    """
    mu, s2, g = _as_triples(validation)
    obj = _Objective(mu, s2, g, cfg.ece_bins)

    best = _search(obj, cfg.alpha_grid, cfg.beta_grid, None)
    if best is None:
        raise NoFeasibleCalibration("every (alpha, beta) candidate yields a nonpositive variance")

    log_lo, log_hi = math.log(min(cfg.alpha_grid)), math.log(max(cfg.alpha_grid))
    b_lo, b_hi = min(cfg.beta_grid), max(cfg.beta_grid)
    n_a, n_b = len(cfg.alpha_grid), len(cfg.beta_grid)
    for r in range(1, cfg.refine_rounds + 1):
        _, _, beta0, alpha0 = best
        half_log = (log_hi - log_lo) / (2.0 * cfg.shrink**r)
        half_b = (b_hi - b_lo) / (2.0 * cfg.shrink**r)
        alphas = np.exp(np.linspace(math.log(alpha0) - half_log, math.log(alpha0) + half_log, n_a)).tolist()
        if half_b > 0:
            betas = np.linspace(max(0.0, beta0 - half_b), beta0 + half_b, n_b)
        else:
            betas = np.array([beta0])
        best = _search(obj, alphas, betas, best)

    _, _, beta, alpha = best
    return CalibrationParams(
        std_mean=std_mean, std_scale=std_scale, alpha=alpha, beta=beta, ece_bins=cfg.ece_bins
    )


def evaluated_candidates(validation, cfg: CalibrationSearchConfig = CalibrationSearchConfig()) -> dict:
    """Coarse-grid ``(alpha, beta) -> ECE`` table, for inspection and tests."""
    mu, s2, g = _as_triples(validation)
    obj = _Objective(mu, s2, g, cfg.ece_bins)
    pairs = [(a, b) for a in cfg.alpha_grid for b in cfg.beta_grid]
    return {ab: k[0] for ab, k in zip(pairs, obj.keys(cfg.alpha_grid, cfg.beta_grid)) if k is not None}


def apply_calibration(dist: QualityGaussian, params: CalibrationParams) -> QualityGaussian:
    """Map the variance through ``alpha * sigma2 + beta``; the mean is untouched."""
    var = params.alpha * dist.sigma2 + params.beta
    if not var > 0:
        raise DegenerateDistribution(f"calibrated variance {var} is not positive")
    return QualityGaussian(dist.mu, var)


def apply_calibration_batch(dists: Gaussians, params: CalibrationParams) -> GaussianBatch:
    b = as_batch(dists)
    var = params.alpha * b.sigma2 + params.beta
    if np.any(var <= 0):
        raise DegenerateDistribution("calibrated variance is not positive for some segments")
    return GaussianBatch(b.mu, var)
