import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uaeval.baseline import baseline_distributions, fixed_variance
from uaeval.errors import DegenerateDistribution, InvalidInput
from uaeval.metrics import nll, ups


def test_unit_residuals():
    assert fixed_variance([(0.0, 1.0), (0.0, -1.0)]) == 1.0


def test_exact_fit_is_zero():
    assert fixed_variance(([0.1, 0.2], [0.1, 0.2])) == 0.0


def test_divisor_is_n():
    assert fixed_variance(([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])) == pytest.approx(14 / 3)


def test_empty_and_mismatch():
    with pytest.raises(InvalidInput):
        fixed_variance([])
    with pytest.raises(InvalidInput):
        fixed_variance(([0.0], [1.0, 2.0]))


@given(st.integers(0, 2**32 - 1), st.integers(2, 200))
def test_nll_minimal_at_fixed_variance(seed, n):
    r = np.random.default_rng(seed)
    mu = r.normal(size=n)
    g = mu + r.normal(size=n) * r.uniform(0.1, 3)
    v = fixed_variance((mu, g))
    base = nll(baseline_distributions(mu, v), g)
    for c in (0.5, 0.9, 1.1, 2.0):
        assert nll(baseline_distributions(mu, c * v), g) > base


def test_distributions_shape():
    b = baseline_distributions([0.1, 0.9], 0.5)
    assert b.mu.tolist() == [0.1, 0.9] and b.sigma2.tolist() == [0.5, 0.5]
    assert len(baseline_distributions([0.3], 0.2)) == 1


def test_floor_applies():
    assert baseline_distributions([0.0], 0.0, min_sigma2=1e-6).sigma2[0] == 1e-6


def test_nonpositive_variance():
    with pytest.raises(DegenerateDistribution):
        baseline_distributions([0.0], 0.0)


def test_ups_absent():
    r = np.random.default_rng(3)
    b = baseline_distributions(r.normal(size=20), 0.4)
    assert ups(b, r.normal(size=20)) is None


def test_baseline_less_calibrated_than_recalibrated_mc():
    from uaeval.pipeline import RunConfig, cross_validate
    from uaeval.simulator import SimSpec, generate

    worse = 0
    for seed in range(5):
        ds = generate(SimSpec(n_segments=600, n_samples=30, seed=seed, sigma_min=0.05, sigma_max=1.5))
        base = cross_validate(ds, RunConfig(k=3, seed=seed, method="baseline")).mean
        mc = cross_validate(ds, RunConfig(k=3, seed=seed)).mean
        worse += base.ece > mc.ece
    assert worse >= 4
