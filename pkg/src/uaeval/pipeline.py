"""End-to-end runs: k-fold evaluation, critical-error detection, reference-count studies.

Each fold standardizes scores with the validation golds, fits one Gaussian
per segment on the standardized aggregated samples, tunes the variance
calibration on validation and reports on the held-out fold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .aggregation import aggregate_batch, sample_reference_subsets
from .baseline import baseline_distributions, fixed_variance
from .calibration import (
    CalibrationSearchConfig,
    apply_calibration_batch,
    fit_standardizer,
    tune_affine,
)
from .distribution import DEFAULT_MIN_SIGMA2, GaussianBatch
from .errors import InvalidInput
from .ingestion import Dataset, FoldPlan, make_folds, split, standardize_dataset
from .metrics import EceConfig, evaluate, mean_report
from .nonparametric import evaluate_nonparametric
from .retrieval import (
    RiskConfig,
    build_target_set,
    normalize_by_length,
    retrieval_report,
    target_size,
    tune_q_err,
)
from .types import CalibrationParams, EvalReport, RetrievalReport, Strategy

METHODS = ("parametric", "baseline", "nonparametric")
COMBINE_NOTE = "fold metrics combined by unweighted mean over folds"


@dataclass(frozen=True)
class RunConfig:
    k: int = 5
    seed: int = 0
    method: str = "parametric"
    ece_bins: Optional[int] = None
    refs: Optional[tuple[int, ...]] = None
    min_sigma2: float = DEFAULT_MIN_SIGMA2
    search: CalibrationSearchConfig = field(default_factory=CalibrationSearchConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInput(f"method must be one of {METHODS}")
        if self.k < 2:
            raise InvalidInput("k must be >= 2")
        if self.ece_bins is not None and self.ece_bins < 2:
            raise InvalidInput("ece_bins must be >= 2")
        if self.refs is not None:
            object.__setattr__(self, "refs", tuple(int(r) for r in self.refs))

    @property
    def bins(self) -> int:
        if self.ece_bins is not None:
            return self.ece_bins
        return 20 if self.method == "nonparametric" else 100


def aggregated_samples(ds: Dataset, refs: Optional[Sequence[int]] = None) -> np.ndarray:
    """``(segments, N)`` scores after averaging the selected references."""
    return aggregate_batch(ds.sample_tensor(), refs)


def fit_dataset(ds: Dataset, refs=None, min_sigma2: float = DEFAULT_MIN_SIGMA2) -> GaussianBatch:
    return GaussianBatch.from_samples(aggregated_samples(ds, refs), min_sigma2)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    report: Any
    calibration: Optional[CalibrationParams] = None
    sigma2_fixed: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"fold": self.fold, "report": self.report.to_dict()}
        if self.calibration is not None:
            d["calibration"] = self.calibration.to_dict()
        if self.sigma2_fixed is not None:
            d["sigma2_fixed"] = self.sigma2_fixed
        return d


@dataclass(frozen=True)
class NonparametricReport:
    pps: Optional[float]
    ece: float
    n_segments: int

    def to_dict(self) -> dict:
        return {"pps": self.pps, "ece": self.ece, "n_segments": self.n_segments}

    def table_cells(self) -> list[str]:
        return ["-" if self.pps is None else f"{self.pps:.3f}", f"{self.ece:.3f}"]


def _standardized_pair(val: Dataset, test: Dataset, refs) -> tuple[Dataset, Dataset, float, float]:
    val_means = aggregated_samples(val, refs).mean(axis=1)
    m, s = fit_standardizer(val.golds(), val_means)
    return standardize_dataset(val, m, s), standardize_dataset(test, m, s), m, s


def evaluate_fold(val: Dataset, test: Dataset, cfg: RunConfig, fold: int = 0) -> FoldResult:
    sval, stest, m, s = _standardized_pair(val, test, cfg.refs)
    g_val, g_test = sval.golds(), stest.golds()
    ece_cfg = EceConfig(n_bins=cfg.bins)

    if cfg.method == "parametric":
        d_val = fit_dataset(sval, cfg.refs, cfg.min_sigma2)
        d_test = fit_dataset(stest, cfg.refs, cfg.min_sigma2)
        search = cfg.search if cfg.search.ece_bins == cfg.bins else _with_bins(cfg.search, cfg.bins)
        params = tune_affine((d_val.mu, d_val.sigma2, g_val), search, std_mean=m, std_scale=s)
        report = evaluate(apply_calibration_batch(d_test, params), g_test, ece_cfg)
        return FoldResult(fold, report, calibration=params)

    if cfg.method == "baseline":
        q_val, _ = sval.point_estimates()
        q_test, _ = stest.point_estimates()
        s2 = fixed_variance((q_val, g_val))
        report = evaluate(baseline_distributions(q_test, s2, cfg.min_sigma2), g_test, ece_cfg)
        return FoldResult(fold, report, sigma2_fixed=s2)

    pps, e = evaluate_nonparametric(aggregated_samples(stest, cfg.refs), g_test, ece_cfg)
    return FoldResult(fold, NonparametricReport(pps, e, len(stest)))


def _with_bins(search: CalibrationSearchConfig, bins: int) -> CalibrationSearchConfig:
    return CalibrationSearchConfig(
        alpha_grid=search.alpha_grid,
        beta_grid=search.beta_grid,
        refine_rounds=search.refine_rounds,
        ece_bins=bins,
        shrink=search.shrink,
    )


def _mean_np(reports: Sequence[NonparametricReport]) -> NonparametricReport:
    pps = None if any(r.pps is None for r in reports) else math.fsum(r.pps for r in reports) / len(reports)
    return NonparametricReport(pps, math.fsum(r.ece for r in reports) / len(reports), sum(r.n_segments for r in reports))


@dataclass(frozen=True)
class CrossValidation:
    plan: FoldPlan
    folds: tuple[FoldResult, ...]
    mean: Any
    config: RunConfig

    def to_dict(self) -> dict:
        return {
            "note": COMBINE_NOTE,
            "method": self.config.method,
            "k": self.config.k,
            "seed": self.config.seed,
            "ece_bins": self.config.bins,
            "refs": None if self.config.refs is None else list(self.config.refs),
            "variance_estimator": "unbiased",
            "min_sigma2": self.config.min_sigma2,
            "folds": [f.to_dict() for f in self.folds],
            "mean": self.mean.to_dict(),
        }


def cross_validate(ds: Dataset, cfg: RunConfig = RunConfig(), plan: Optional[FoldPlan] = None) -> CrossValidation:
    plan = plan or make_folds(ds, cfg.k, cfg.seed)
    folds = []
    for f in range(plan.k):
        val, test = split(ds, plan, f)
        folds.append(evaluate_fold(val, test, cfg, f))
    reports = [f.report for f in folds]
    mean = _mean_np(reports) if cfg.method == "nonparametric" else mean_report(reports)
    return CrossValidation(plan, tuple(folds), mean, cfg)


def calibrate_dataset(ds: Dataset, cfg: RunConfig = RunConfig()) -> CalibrationParams:
    """Standardize on the whole dataset and tune the variance map on it."""
    m, s = fit_standardizer(ds.golds(), aggregated_samples(ds, cfg.refs).mean(axis=1))
    sds = standardize_dataset(ds, m, s)
    d = fit_dataset(sds, cfg.refs, cfg.min_sigma2)
    search = cfg.search if cfg.search.ece_bins == cfg.bins else _with_bins(cfg.search, cfg.bins)
    return tune_affine((d.mu, d.sigma2, sds.golds()), search, std_mean=m, std_scale=s)


@dataclass(frozen=True)
class DetectConfig:
    risk: RiskConfig = field(default_factory=RiskConfig)
    strategies: tuple[str, ...] = tuple(s.value for s in Strategy)
    k: int = 5
    test_fold: int = 0
    seed: int = 0
    min_sigma2: float = DEFAULT_MIN_SIGMA2
    refs: Optional[tuple[int, ...]] = None
    search: CalibrationSearchConfig = field(default_factory=CalibrationSearchConfig)

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(Strategy(s).value for s in self.strategies))
        if not self.strategies:
            raise InvalidInput("no strategies selected")


@dataclass(frozen=True)
class Detection:
    reports: tuple[RetrievalReport, ...]
    target_set: frozenset
    q_err: Optional[float]
    calibration: CalibrationParams
    n_test: int
    config: DetectConfig

    def to_dict(self) -> dict:
        return {
            "worst_fraction": self.config.risk.worst_fraction,
            "length_normalize": self.config.risk.length_normalize,
            "k": self.config.k,
            "test_fold": self.config.test_fold,
            "seed": self.config.seed,
            "n_test": self.n_test,
            "q_err": self.q_err,
            "calibration": self.calibration.to_dict(),
            "target_set": sorted(self.target_set),
            "reports": [r.to_dict() for r in self.reports],
        }


def _target_golds(ds: Dataset, length_normalize: bool) -> np.ndarray:
    g = ds.golds()
    if not length_normalize:
        return g
    return np.array([normalize_by_length(x, n) for x, n in zip(g.tolist(), ds.mt_lengths().tolist())])


def detect(ds: Dataset, cfg: DetectConfig = DetectConfig(), plan: Optional[FoldPlan] = None) -> Detection:
    """Rank the held-out fold worst-first under each strategy.

    The target set holds the lowest (optionally per-word) golds of the test
    fold. ``q_err`` is tuned on validation unless given, in standardized
    units.
    """
    plan = plan or make_folds(ds, cfg.k, cfg.seed)
    val, test = split(ds, plan, cfg.test_fold)
    sval, stest, m, s = _standardized_pair(val, test, cfg.refs)
    d_val = fit_dataset(sval, cfg.refs, cfg.min_sigma2)
    d_test = fit_dataset(stest, cfg.refs, cfg.min_sigma2)
    params = tune_affine((d_val.mu, d_val.sigma2, sval.golds()), cfg.search, std_mean=m, std_scale=s)
    d_val = apply_calibration_batch(d_val, params)
    d_test = apply_calibration_batch(d_test, params)

    val_targets = _target_golds(val, cfg.risk.length_normalize)
    test_targets = _target_golds(test, cfg.risk.length_normalize)
    n_target = target_size(len(test), cfg.risk.worst_fraction)
    if n_target < 1:
        raise InvalidInput(
            f"worst_fraction {cfg.risk.worst_fraction} selects no segments of a {len(test)}-segment test fold"
        )
    targets = build_target_set(test.segment_ids, test_targets, n_worst=n_target)

    q_err = None
    if Strategy.risk_cdf.value in cfg.strategies:
        if cfg.risk.q_err == "tune":
            q_err = tune_q_err((d_val, val_targets), cfg.risk)
        else:
            q_err = float(cfg.risk.q_err)

    n_values = range(1, len(test) + 1)
    reports = []
    for name in cfg.strategies:
        strategy = Strategy(name)
        if strategy is Strategy.point_estimate:
            scores = stest.point_estimates()[0]
        else:
            scores = d_test
        reports.append(
            retrieval_report(test.segment_ids, scores, strategy, targets, n_values, q_err if strategy is Strategy.risk_cdf else None)
        )
    return Detection(tuple(reports), frozenset(targets), q_err, params, len(test), cfg)


def multiref(
    ds: Dataset, patterns: Sequence[str], cfg: RunConfig = RunConfig(), max_subsets: Optional[int] = None
) -> dict[str, dict]:
    """Cross-validated reports for ``S-k`` (each size-k reference subset) and ``Mul`` (all references)."""
    plan = make_folds(ds, cfg.k, cfg.seed)
    out: dict[str, dict] = {}
    for pattern in patterns:
        if pattern == "Mul":
            subsets = [list(range(ds.n_refs))]
        elif pattern.startswith("S-") and pattern[2:].isdigit():
            subsets = sample_reference_subsets(ds.n_refs, int(pattern[2:]), cfg.seed, max_subsets)
        else:
            raise InvalidInput(f"unknown reference pattern {pattern!r}; use S-<k> or Mul")
        per = []
        for sub in subsets:
            run = RunConfig(
                k=cfg.k, seed=cfg.seed, method=cfg.method, ece_bins=cfg.ece_bins,
                refs=tuple(sub), min_sigma2=cfg.min_sigma2, search=cfg.search,
            )
            per.append((sub, cross_validate(ds, run, plan).mean))
        reports = [r for _, r in per]
        mean = _mean_np(reports) if cfg.method == "nonparametric" else mean_report(reports)
        out[pattern] = {"subsets": per, "mean": mean}
    return out
