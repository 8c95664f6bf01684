import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from uaeval.aggregation import aggregate_batch, aggregate_references, sample_reference_subsets
from uaeval.distribution import GaussianBatch
from uaeval.errors import InvalidInput
from uaeval.metrics import sharpness
from uaeval.simulator import SimSpec, generate

matrices = st.tuples(st.integers(1, 8), st.integers(1, 5)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(-1e3, 1e3))
)


def test_row_means():
    np.testing.assert_array_equal(aggregate_references([[1, 3], [2, 4]]), [2.0, 3.0])


def test_single_reference_is_identity(rng):
    x = rng.normal(size=(9, 1))
    out = aggregate_references(x)
    np.testing.assert_array_equal(out, x[:, 0])


def test_subset_selects_columns():
    x = np.array([[1.0, 10.0, 100.0], [2.0, 20.0, 200.0]])
    np.testing.assert_array_equal(aggregate_references(x, [0, 2]), [50.5, 101.0])
    np.testing.assert_array_equal(aggregate_references(x, [1]), [10.0, 20.0])


@pytest.mark.parametrize("subset", [[], [3], [-1], [0, 0]])
def test_bad_subsets(subset):
    with pytest.raises(InvalidInput):
        aggregate_references(np.ones((2, 3)), subset)


def test_ragged_or_empty_rejected():
    with pytest.raises(InvalidInput):
        aggregate_references(np.ones(3))
    with pytest.raises(InvalidInput):
        aggregate_references(np.ones((0, 2)))


@given(matrices)
def test_mean_preservation(x):
    out = aggregate_references(x)
    grand = x.mean()
    assert abs(out.mean() - grand) <= 1e-12 * max(1.0, np.abs(x).max())


@given(matrices)
def test_batch_matches_single(x):
    np.testing.assert_array_equal(aggregate_batch(x[None])[0], aggregate_references(x))


def test_variance_of_mean_law():
    ds = generate(SimSpec(n_segments=400, n_samples=100, n_refs=3, seed=4))
    x = ds.sample_tensor()
    single = np.var(x[:, :, 0], axis=1, ddof=1).mean()
    agg = np.var(aggregate_batch(x), axis=1, ddof=1).mean()
    assert agg / single == pytest.approx(1 / 3, rel=0.15)


def test_sharpness_nonincreasing_in_subset_size():
    ds = generate(SimSpec(n_segments=1000, n_samples=30, n_refs=3, seed=8))
    x = ds.sample_tensor()
    sha = [sharpness(GaussianBatch.from_samples(aggregate_batch(x, list(range(k))))) for k in (1, 2, 3)]
    assert sha[0] >= sha[1] >= sha[2]


class TestSubsets:
    def test_full(self):
        assert sample_reference_subsets(3, 3) == [[0, 1, 2]]

    def test_enumeration(self):
        assert sample_reference_subsets(2, 1) == [[0], [1]]
        assert sample_reference_subsets(3, 2) == [[0, 1], [0, 2], [1, 2]]

    def test_seeded_sampling_is_stable(self):
        a = sample_reference_subsets(6, 3, seed=5, max_subsets=4)
        assert a == sample_reference_subsets(6, 3, seed=5, max_subsets=4)
        assert len(a) == 4 and len({tuple(s) for s in a}) == 4
        assert all(s == sorted(s) and len(s) == 3 for s in a)

    def test_cap_above_total_enumerates(self):
        assert sample_reference_subsets(3, 2, max_subsets=10) == sample_reference_subsets(3, 2)

    @pytest.mark.parametrize("r,k", [(2, 3), (3, 0), (0, 1)])
    def test_invalid(self, r, k):
        with pytest.raises(InvalidInput):
            sample_reference_subsets(r, k)
