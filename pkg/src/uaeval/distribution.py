"""Gaussian predictive distributions fitted to stochastic score samples.

The error function is evaluated in-house: a positive-term series for
``|x| <= 1.5`` and a continued fraction for the complementary function
beyond that, so both tails keep full relative precision. The probit is a
bracketed Newton inversion of the resulting CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import DegenerateDistribution, InvalidInput
from .types import ConfidenceInterval, QualityGaussian

DEFAULT_MIN_SIGMA2 = 1e-6

_SQRT2 = math.sqrt(2.0)
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SERIES_LIMIT = 1.5
_SERIES_TERMS = 120
_CF_DEPTH = 200


@dataclass(frozen=True)
class ProbitConfig:
    tolerance: float = 1e-10
    max_iterations: int = 200

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidInput("tolerance must be > 0")
        if self.max_iterations < 1:
            raise InvalidInput("max_iterations must be positive")


DEFAULT_PROBIT = ProbitConfig()


def _erf_series(x: np.ndarray) -> np.ndarray:
    # erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n x (2x^2)^n / (1*3*...*(2n+1))
    two_x2 = 2.0 * x * x
    term = x.copy()
    total = x.copy()
    for n in range(1, _SERIES_TERMS):
        term = term * two_x2 / (2 * n + 1)
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return _TWO_OVER_SQRT_PI * np.exp(-x * x) * total


def _erfc_cf(x: np.ndarray) -> np.ndarray:
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), x > 0
    f = x.copy()
    for k in range(_CF_DEPTH, 0, -1):
        f = x + (0.5 * k) / f
    return _INV_SQRT_PI * np.exp(-x * x) / f


def erfc(x):
    """Complementary error function, elementwise, accurate in the right tail."""
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    ax = np.abs(xa)
    out = np.empty_like(ax)
    small = ax <= _SERIES_LIMIT
    if np.any(small):
        out[small] = 1.0 - _erf_series(ax[small])
    big = ~small
    if np.any(big):
        with np.errstate(over="ignore", invalid="ignore"):
            out[big] = _erfc_cf(ax[big])
        out[big & np.isinf(ax)] = 0.0
    neg = xa < 0
    out[neg] = 2.0 - out[neg]
    out[np.isnan(xa)] = np.nan
    return float(out[0]) if scalar else out


def erf(x):
    """Error function, elementwise."""
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    ax = np.abs(xa)
    out = np.empty_like(ax)
    small = ax <= _SERIES_LIMIT
    if np.any(small):
        out[small] = _erf_series(ax[small])
    big = ~small
    if np.any(big):
        out[big] = 1.0 - erfc(ax[big])
    out = np.copysign(out, xa)
    return float(out[0]) if scalar else out


def std_normal_cdf(z):
    """Phi(z) = erfc(-z / sqrt(2)) / 2, elementwise."""
    return 0.5 * erfc(-np.asarray(z, dtype=np.float64) / _SQRT2) if np.ndim(z) else 0.5 * erfc(-float(z) / _SQRT2)


def std_normal_pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def probit(p: float, cfg: ProbitConfig = DEFAULT_PROBIT) -> float:
    """Standard-normal quantile function.

    Solves ``Phi(x) = min(p, 1 - p)`` in the left tail by Newton steps kept
    inside a shrinking bracket, then reflects, which makes
    ``probit(1 - p) == -probit(p)`` hold exactly.
    """
    if not isinstance(p, (int, float, np.floating)) or not 0.0 < p < 1.0:
        raise InvalidInput(f"probit needs p in (0, 1), got {p!r}")
    p = float(p)
    if p == 0.5:
        return 0.0
    q = p if p < 0.5 else 1.0 - p

    lo, hi = -40.0, 0.0
    x = -math.sqrt(-2.0 * math.log(q)) if q < 0.1 else (q - 0.5) * math.sqrt(2.0 * math.pi)
    x = min(max(x, lo), hi)
    for _ in range(cfg.max_iterations):
        f = std_normal_cdf(x) - q
        if f > 0:
            hi = x
        else:
            lo = x
        dens = float(std_normal_pdf(x))
        step = f / dens if dens > 0 else math.inf
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= cfg.tolerance:
            x = x_new
            # one more Newton step squares the remaining error
            dens = float(std_normal_pdf(x))
            if dens > 0:
                x -= (std_normal_cdf(x) - q) / dens
            break
        x = x_new
    return x if p < 0.5 else -x


def fit_gaussians(samples: np.ndarray, min_sigma2: float = DEFAULT_MIN_SIGMA2) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise mean and unbiased variance of a ``(segments, N)`` array, floored."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 1 or arr.shape[0] < 1:
        raise InvalidInput("expected a nonempty (segments, samples) array")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("samples contain non-finite values")
    if min_sigma2 < 0:
        raise InvalidInput("min_sigma2 must be >= 0")
    mu = arr.mean(axis=1)
    if arr.shape[1] >= 2:
        var = arr.var(axis=1, ddof=1)
    else:
        var = np.zeros(arr.shape[0])
    var = np.maximum(var, min_sigma2)
    if np.any(var <= 0):
        raise DegenerateDistribution("degenerate samples and min_sigma2 = 0 give zero variance")
    return mu, var


def fit_gaussian(samples: Sequence[float], min_sigma2: float = DEFAULT_MIN_SIGMA2) -> QualityGaussian:
    """Sample mean and unbiased sample variance, with the variance floored at ``min_sigma2``."""
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InvalidInput("cannot fit a distribution to an empty sample")
    mu, var = fit_gaussians(arr[None, :], min_sigma2)
    return QualityGaussian(float(mu[0]), float(var[0]))


@dataclass(frozen=True, eq=False)
class GaussianBatch:
    """Column-oriented storage for many fitted distributions.

    Accepted anywhere a list of :class:`QualityGaussian` is; iterating yields
    the individual distributions.
    """

    mu: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64).ravel()
        s2 = np.array(self.sigma2, dtype=np.float64).ravel()
        if mu.shape != s2.shape:
            raise InvalidInput("mu and sigma2 lengths differ")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(s2))):
            raise InvalidInput("non-finite distribution parameters")
        if np.any(s2 <= 0):
            raise DegenerateDistribution("sigma2 must be > 0 for every distribution")
        mu.setflags(write=False)
        s2.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", s2)

    def __len__(self) -> int:
        return self.mu.size

    def __iter__(self) -> Iterator[QualityGaussian]:
        for m, v in zip(self.mu, self.sigma2):
            yield QualityGaussian(float(m), float(v))

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return QualityGaussian(float(self.mu[i]), float(self.sigma2[i]))
        return GaussianBatch(self.mu[i], self.sigma2[i])

    @classmethod
    def from_samples(cls, samples: np.ndarray, min_sigma2: float = DEFAULT_MIN_SIGMA2) -> "GaussianBatch":
        return cls(*fit_gaussians(samples, min_sigma2))


Gaussians = Union[GaussianBatch, Sequence[QualityGaussian]]


def as_batch(dists: Gaussians) -> GaussianBatch:
    if isinstance(dists, GaussianBatch):
        return dists
    if isinstance(dists, QualityGaussian):
        dists = [dists]
    dists = list(dists)
    return GaussianBatch(
        np.fromiter((d.mu for d in dists), dtype=np.float64, count=len(dists)),
        np.fromiter((d.sigma2 for d in dists), dtype=np.float64, count=len(dists)),
    )


def confidence_interval(
    dist: QualityGaussian, gamma: float, cfg: ProbitConfig = DEFAULT_PROBIT
) -> ConfidenceInterval:
    """Symmetric interval ``mu -/+ sigma * probit((1 + gamma) / 2)``."""
    if not 0.0 < gamma < 1.0:
        raise InvalidInput(f"gamma must lie in (0, 1), got {gamma}")
    half = dist.sigma * probit((1.0 + gamma) / 2.0, cfg)
    return ConfidenceInterval(gamma, dist.mu - half, dist.mu + half)


def cdf(dist: QualityGaussian, chi: float) -> float:
    """Probability that the quality falls at or below ``chi``."""
    return float(std_normal_cdf((chi - dist.mu) / dist.sigma))


def cdf_batch(dists: Gaussians, chi: float) -> np.ndarray:
    b = as_batch(dists)
    return std_normal_cdf((chi - b.mu) / np.sqrt(b.sigma2))


def nll_point(dist: QualityGaussian, gold: float) -> float:
    if not math.isfinite(gold):
        raise InvalidInput("gold must be finite")
    return 0.5 * math.log(2.0 * math.pi * dist.sigma2) + (gold - dist.mu) ** 2 / (2.0 * dist.sigma2)
