import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uaeval.distribution import GaussianBatch, cdf
from uaeval.errors import InvalidInput
from uaeval.retrieval import (
    RiskConfig,
    build_target_set,
    curve_table,
    normalize_by_length,
    rank,
    recall_precision_at,
    retrieval_report,
    target_size,
    tune_q_err,
)
from uaeval.types import QualityGaussian, RetrievalReport, Strategy


def _ids(n):
    return [f"s{j:03d}" for j in range(n)]


class TestNormalize:
    def test_table_row(self):
        assert normalize_by_length(17.67, 6) == pytest.approx(2.945, abs=1e-12)

    def test_trivial(self):
        assert normalize_by_length(0.0, 9) == 0.0 and normalize_by_length(10.0, 1) == 10.0

    @pytest.mark.parametrize("n", [0, -3, 2.5, True])
    def test_bad_length(self, n):
        with pytest.raises(InvalidInput):
            normalize_by_length(1.0, n)


class TestTargetSet:
    def test_two_lowest(self, rng):
        g = rng.normal(size=100)
        ids = _ids(100)
        want = {ids[j] for j in np.argsort(g)[:2]}
        assert build_target_set(ids, g, 0.02) == want

    def test_ties_by_id(self):
        assert build_target_set(["c", "a", "b", "d"], [1.0] * 4, 0.5) == {"a", "b"}

    def test_floor(self):
        assert target_size(100, 0.29) == 29 and target_size(49, 0.02) == 0

    def test_exactly_one_size_argument(self):
        with pytest.raises(InvalidInput):
            build_target_set(["a"], [1.0])
        with pytest.raises(InvalidInput):
            build_target_set(["a"], [1.0], 0.5, 1)


class TestRank:
    def test_high_sigma_riskier_below_mean(self):
        d = [QualityGaussian(0.0, 0.01), QualityGaussian(0.0, 1.0)]
        assert cdf(d[1], -1.0) > cdf(d[0], -1.0)
        assert rank(["lo", "hi"], d, Strategy.risk_cdf, q_err=-1.0) == ["hi", "lo"]

    def test_point_and_mean_strategies(self):
        d = GaussianBatch([0.3, -0.2, 0.1], [1.0, 1.0, 1.0])
        assert rank(["a", "b", "c"], [0.3, -0.2, 0.1], "point_estimate") == ["b", "c", "a"]
        assert rank(["a", "b", "c"], d, "mean_of_samples") == ["b", "c", "a"]

    def test_single_sample_means_equal_points(self, rng):
        x = rng.normal(size=(30, 1))
        d = GaussianBatch.from_samples(x)
        assert rank(_ids(30), d, "mean_of_samples") == rank(_ids(30), x[:, 0], "point_estimate")

    @given(st.integers(2, 80), st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(1e-4, 4))
    def test_constant_sigma_matches_mean_ranking(self, n, seed, q, v):
        r = np.random.default_rng(seed)
        mu = np.round(r.normal(size=n), 2)  # rounding forces ties
        d = GaussianBatch(mu, np.full(n, v))
        assert rank(_ids(n), d, "risk_cdf", q) == rank(_ids(n), d, "mean_of_samples")

    def test_risk_needs_threshold(self):
        with pytest.raises(InvalidInput):
            rank(["a"], [QualityGaussian(0, 1)], "risk_cdf")

    def test_length_mismatch(self):
        with pytest.raises(InvalidInput):
            rank(["a", "b"], [0.1], "point_estimate")


class TestRecallPrecision:
    def test_perfect_front(self):
        rec, prec = recall_precision_at(["a", "b", "c", "d"], {"a", "b"}, [2])
        assert rec[2] == 1.0 and prec[2] == 1.0

    def test_exhaustive(self, rng):
        ids = _ids(100)
        t = build_target_set(ids, rng.normal(size=100), 0.02)
        rec, prec = recall_precision_at(list(rng.permutation(ids)), t, [100])
        assert rec[100] == 1.0 and prec[100] == 0.02

    @given(st.permutations(list(range(30))), st.sets(st.integers(0, 29), min_size=1))
    def test_monotone(self, perm, targets):
        ranking = [str(j) for j in perm]
        ns = list(range(1, 31))
        rec, prec = recall_precision_at(ranking, {str(t) for t in targets}, ns)
        assert all(rec[a] <= rec[b] for a, b in zip(ns, ns[1:]))
        hits = [prec[n] * n for n in ns]
        assert all(hits[i] <= hits[i + 1] + 1e-9 for i in range(29))
        assert all(0 <= prec[n] <= 1 for n in ns)

    def test_empty_targets(self):
        with pytest.raises(InvalidInput):
            recall_precision_at(["a"], set(), [1])


class TestTuneQErr:
    def test_single_candidate(self, rng):
        d = GaussianBatch(rng.normal(size=50), np.ones(50))
        assert tune_q_err((d, rng.normal(size=50)), candidates=[0.7]) == 0.7

    def test_pairs_accepted(self, rng):
        d = GaussianBatch(rng.normal(size=50), rng.uniform(0.1, 1, 50))
        g = rng.normal(size=50)
        assert tune_q_err(list(zip(d, g))) == tune_q_err((d, g))

    def test_ties_go_to_smaller(self):
        d = GaussianBatch([0.0, 1.0, 2.0, 3.0], [1.0] * 4)
        # constant sigma: every threshold gives the same ranking
        assert tune_q_err((d, [0.0, 1.0, 2.0, 3.0]), RiskConfig(worst_fraction=0.25), candidates=[2.0, -1.0, 5.0]) == -1.0

    def test_within_mean_range(self, rng):
        d = GaussianBatch(rng.normal(size=200), rng.uniform(0.1, 1, 200))
        q = tune_q_err((d, rng.normal(size=200)))
        assert d.mu.min() - 1 <= q <= d.mu.max() + 1

    def test_empty(self):
        with pytest.raises(InvalidInput):
            tune_q_err([])

    def test_config_validation(self):
        with pytest.raises(InvalidInput):
            RiskConfig(worst_fraction=0.0)
        with pytest.raises(InvalidInput):
            RiskConfig(q_err="auto")
        with pytest.raises(InvalidInput):
            RiskConfig(tune_recall_points=(0,))


def test_report_and_curves(rng):
    ids = _ids(40)
    d = GaussianBatch(rng.normal(size=40), rng.uniform(0.1, 1, 40))
    t = build_target_set(ids, rng.normal(size=40), 0.1)
    reps = [
        retrieval_report(ids, d.mu, "point_estimate", t, range(1, 41)),
        retrieval_report(ids, d, "risk_cdf", t, range(1, 41), q_err=-0.5),
    ]
    assert reps[0].q_err is None and reps[1].q_err == -0.5
    rows = list(csv.reader(curve_table(reps).splitlines(), delimiter="\t"))
    assert rows[0] == ["N", "recall_point_estimate", "precision_point_estimate", "recall_risk_cdf", "precision_risk_cdf"]
    assert len(rows) == 41
    back = RetrievalReport.from_dict(reps[1].to_dict())
    assert back == reps[1]


def test_report_invariants():
    with pytest.raises(InvalidInput):
        RetrievalReport(Strategy.mean_of_samples, ("a",), {1: 1.0, 2: 0.5}, {1: 1.0, 2: 0.5})
    with pytest.raises(InvalidInput):
        RetrievalReport(Strategy.mean_of_samples, ("a",), {1: 1.0}, {1: 1.0}, q_err=0.1)
