"""Reference implementations that share no code with the package.

They lean on :func:`math.erf` and plain Python loops, so agreement with the
package is evidence that both are right.
"""

import math


def phi(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def probit_bisect(p: float, lo: float = -40.0, hi: float = 40.0, iters: int = 200) -> float:
    """Standard-normal quantile by bisection on ``phi``.

    The upper half is reflected onto the lower one, where ``phi`` keeps full
    relative precision.
    """
    if p > 0.5:
        return -probit_bisect(1.0 - p, lo, hi, iters)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if phi(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gaussian_cdf(mu: float, sigma2: float, x: float) -> float:
    return phi((x - mu) / math.sqrt(sigma2))


def quantile_type7(values, q: float) -> float:
    """Linear interpolation between order statistics, ``h = (n - 1) q``."""
    xs = sorted(values)
    h = (len(xs) - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def pearson_naive(x, y) -> float:
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def ece_bruteforce(mus, sigma2s, golds, n_bins: int) -> float:
    """Per-level coverage by explicit interval checks, levels at bin centers."""
    total = 0.0
    for b in range(1, n_bins + 1):
        gamma = (b - 0.5) / n_bins
        z = probit_bisect((1.0 + gamma) / 2.0)
        inside = 0
        for m, v, g in zip(mus, sigma2s, golds):
            half = z * math.sqrt(v)
            inside += (m - half) <= g <= (m + half)
        total += abs(inside / len(golds) - gamma)
    return total / n_bins
