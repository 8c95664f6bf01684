"""Uncertainty-aware evaluation of MT quality scores.

Stochastic scores (MC-dropout passes or ensemble members) are turned into
per-segment Gaussians, recalibrated, evaluated and used to flag risky
translations.
"""

__version__ = "0.1.0"

from .aggregation import aggregate_references, sample_reference_subsets
from .baseline import baseline_distributions, fixed_variance
from .calibration import (
    CalibrationSearchConfig,
    apply_calibration,
    fit_standardizer,
    tune_affine,
)
from .distribution import (
    GaussianBatch,
    ProbitConfig,
    cdf,
    confidence_interval,
    fit_gaussian,
    nll_point,
    probit,
)
from .errors import (
    DegenerateDistribution,
    DegenerateInput,
    InvalidInput,
    NoFeasibleCalibration,
    ParseError,
    SchemaError,
    UndefinedCorrelation,
)
from .ingestion import Dataset, FoldPlan, make_folds, parse_dataset, split
from .metrics import EceConfig, ece, evaluate, nll, pearson, pps, sharpness, ups
from .nonparametric import evaluate_nonparametric, median, percentile_interval
from .retrieval import (
    RiskConfig,
    build_target_set,
    normalize_by_length,
    rank,
    recall_precision_at,
    tune_q_err,
)
from .simulator import SimSpec, generate
from .types import (
    CalibrationParams,
    ConfidenceInterval,
    EvalReport,
    QualityGaussian,
    RetrievalReport,
    SegmentRecord,
    Strategy,
)
