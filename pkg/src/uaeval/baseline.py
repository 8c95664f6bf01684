"""Fixed-variance Gaussian baseline around the scorer's point estimates."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .distribution import GaussianBatch
from .errors import DegenerateDistribution, InvalidInput


def fixed_variance(validation) -> float:
    """Mean squared residual ``mean((gold - mu)**2)``, the NLL-optimal shared variance.

    Args:
        validation: iterable of ``(mu, gold)`` pairs, or a tuple of two
            equal-length arrays.

    The divisor is the number of segments (not ``n - 1``): setting the
    derivative of the average Gaussian NLL with respect to a shared
    variance to zero gives exactly this value.
    """
    if isinstance(validation, tuple) and len(validation) == 2 and np.ndim(validation[0]) == 1:
        mu, g = (np.asarray(v, dtype=np.float64) for v in validation)
    else:
        rows = list(validation)
        if not rows:
            raise InvalidInput("empty validation set")
        mu, g = (np.asarray(c, dtype=np.float64) for c in zip(*rows))
    if mu.size == 0:
        raise InvalidInput("empty validation set")
    if mu.size != g.size:
        raise InvalidInput("validation columns differ in length")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(g))):
        raise InvalidInput("validation values must be finite")
    return math.fsum(np.square(g - mu).tolist()) / mu.size


def baseline_distributions(
    point_estimates: Sequence[float], sigma2_fixed: float, min_sigma2: float = 0.0
) -> GaussianBatch:
    """One ``N(q_hat, sigma2_fixed)`` per point estimate, variance floored at ``min_sigma2``."""
    q = np.asarray(point_estimates, dtype=np.float64).ravel()
    if q.size == 0:
        raise InvalidInput("no point estimates")
    var = max(float(sigma2_fixed), float(min_sigma2))
    if not var > 0:
        raise DegenerateDistribution(f"fixed variance {sigma2_fixed} is not positive")
    return GaussianBatch(q, np.full(q.size, var))
