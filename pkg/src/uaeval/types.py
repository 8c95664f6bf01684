"""Value types passed between the pipeline stages.

All types are immutable after construction. Sample matrices are stored as
read-only numpy arrays of shape ``(n_samples, n_refs)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .errors import DegenerateDistribution, InvalidInput, SchemaError


def _finite(x: float) -> bool:
    return isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x)


@dataclass(frozen=True, eq=False)
class SegmentRecord:
    """One translation with its stochastic scores and human judgement.

    ``samples[i, r]`` is the i-th stochastic score computed against
    reference ``r``. ``gold`` may be ``None`` for inference-only data. When
    per-annotator judgements are given, ``gold`` is their mean and the raw
    values are kept in ``gold_annotators``.
    """

    segment_id: str
    doc_id: str
    system_id: str
    mt_len_words: int
    samples: np.ndarray
    gold: Optional[float] = None
    gold_annotators: Optional[tuple[float, ...]] = None
    point_estimate: Optional[float] = None

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64)
        if arr.ndim != 2:
            raise SchemaError(
                f"samples must be a rectangular N x R matrix, got ndim={arr.ndim}",
                field="samples",
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise SchemaError("samples needs at least one sample and one reference", field="samples")
        if not np.all(np.isfinite(arr)):
            raise SchemaError("samples contain non-finite values", field="samples")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

        if isinstance(self.mt_len_words, bool) or not isinstance(self.mt_len_words, (int, np.integer)):
            raise SchemaError("must be a positive integer", field="mt_len_words")
        if self.mt_len_words < 1:
            raise SchemaError("must be a positive integer", field="mt_len_words")
        object.__setattr__(self, "mt_len_words", int(self.mt_len_words))

        if self.gold_annotators is not None:
            ann = tuple(float(g) for g in self.gold_annotators)
            if not ann or not all(math.isfinite(g) for g in ann):
                raise SchemaError("annotator scores must be a nonempty list of finite reals", field="gold")
            object.__setattr__(self, "gold_annotators", ann)
            if self.gold is None:
                object.__setattr__(self, "gold", math.fsum(ann) / len(ann))
        if self.gold is not None:
            if not _finite(self.gold):
                raise SchemaError("gold must be finite", field="gold")
            object.__setattr__(self, "gold", float(self.gold))
        if self.point_estimate is not None:
            if not _finite(self.point_estimate):
                raise SchemaError("point_estimate must be finite", field="point_estimate")
            object.__setattr__(self, "point_estimate", float(self.point_estimate))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_refs(self) -> int:
        return self.samples.shape[1]

    def to_dict(self) -> dict[str, Any]:
        """Canonical line object; samples are written reference-major."""
        out: dict[str, Any] = {
            "segment_id": self.segment_id,
            "doc_id": self.doc_id,
            "system_id": self.system_id,
            "mt_len_words": self.mt_len_words,
            "gold": list(self.gold_annotators) if self.gold_annotators is not None else self.gold,
        }
        if self.point_estimate is not None:
            out["point_estimate"] = self.point_estimate
        out["samples"] = self.samples.T.tolist()
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SegmentRecord":
        for key in ("segment_id", "doc_id", "system_id", "mt_len_words", "samples"):
            if key not in d:
                raise SchemaError("missing required key", field=key)
        samples = d["samples"]
        if not isinstance(samples, list) or not samples or not all(isinstance(col, list) for col in samples):
            raise SchemaError("expected a nonempty list of per-reference lists", field="samples")
        n = len(samples[0])
        if any(len(col) != n for col in samples):
            raise SchemaError("ragged sample lists (every reference needs the same N)", field="samples")
        gold = d.get("gold")
        annotators = None
        if isinstance(gold, list):
            annotators, gold = tuple(gold), None
        return cls(
            segment_id=str(d["segment_id"]),
            doc_id=str(d["doc_id"]),
            system_id=str(d["system_id"]),
            mt_len_words=d["mt_len_words"],
            samples=np.array(samples, dtype=np.float64).T,
            gold=gold,
            gold_annotators=annotators,
            point_estimate=d.get("point_estimate"),
        )

    def __eq__(self, other):
        if not isinstance(other, SegmentRecord):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.segment_id, self.doc_id, self.system_id))


@dataclass(frozen=True)
class QualityGaussian:
    """Gaussian predictive distribution N(mu, sigma2) for one segment."""

    mu: float
    sigma2: float

    def __post_init__(self):
        if not _finite(self.mu) or not _finite(self.sigma2):
            raise InvalidInput(f"non-finite distribution parameters ({self.mu}, {self.sigma2})")
        if self.sigma2 <= 0:
            raise DegenerateDistribution(f"sigma2 must be > 0, got {self.sigma2}")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class ConfidenceInterval:
    gamma: float
    q_min: float
    q_max: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInput(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.q_min > self.q_max:
            raise InvalidInput(f"q_min {self.q_min} > q_max {self.q_max}")

    @property
    def width(self) -> float:
        return self.q_max - self.q_min

    def __contains__(self, q: float) -> bool:
        return self.q_min <= q <= self.q_max


@dataclass(frozen=True)
class CalibrationParams:
    """Validation standardization plus the affine variance map ``a*s2 + b``."""

    std_mean: float
    std_scale: float
    alpha: float
    beta: float
    ece_bins: int = 100
    variance_estimator: str = "unbiased"

    def __post_init__(self):
        if not (_finite(self.std_scale) and self.std_scale > 0):
            raise InvalidInput(f"std_scale must be > 0, got {self.std_scale}")
        for name in ("std_mean", "alpha", "beta"):
            if not _finite(getattr(self, name)):
                raise InvalidInput(f"{name} must be finite")

    def to_dict(self) -> dict[str, Any]:
        return {
            "std_mean": self.std_mean,
            "std_scale": self.std_scale,
            "alpha": self.alpha,
            "beta": self.beta,
            "ece_bins": self.ece_bins,
            "variance_estimator": self.variance_estimator,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "CalibrationParams":
        try:
            return cls(
                std_mean=float(d["std_mean"]),
                std_scale=float(d["std_scale"]),
                alpha=float(d["alpha"]),
                beta=float(d["beta"]),
                ece_bins=int(d.get("ece_bins", 100)),
                variance_estimator=str(d.get("variance_estimator", "unbiased")),
            )
        except KeyError as exc:
            raise SchemaError("missing calibration key", field=exc.args[0]) from None


REPORT_COLUMNS = ("PPS↑", "UPS↑", "NLL↓", "ECE↓", "Sha.↓")


def _fmt(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.3f}"


@dataclass(frozen=True)
class EvalReport:
    """The five indicators for one dataset. ``ups`` is ``None`` when undefined."""

    pps: Optional[float]
    ups: Optional[float]
    nll: float
    ece: float
    sharpness: float
    n_segments: int

    def __post_init__(self):
        if not 0.0 <= self.ece <= 1.0:
            raise InvalidInput(f"ece out of [0, 1]: {self.ece}")
        if self.sharpness < 0:
            raise InvalidInput(f"negative sharpness: {self.sharpness}")
        if self.n_segments < 1:
            raise InvalidInput("n_segments must be positive")

    def to_dict(self) -> dict[str, Any]:
        return {
            "pps": self.pps,
            "ups": self.ups,
            "nll": self.nll,
            "ece": self.ece,
            "sharpness": self.sharpness,
            "n_segments": self.n_segments,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "EvalReport":
        return cls(
            pps=d["pps"],
            ups=d["ups"],
            nll=float(d["nll"]),
            ece=float(d["ece"]),
            sharpness=float(d["sharpness"]),
            n_segments=int(d["n_segments"]),
        )

    def table_cells(self) -> list[str]:
        return [_fmt(self.pps), _fmt(self.ups), _fmt(self.nll), _fmt(self.ece), _fmt(self.sharpness)]


def format_report_table(rows: Sequence[tuple[str, EvalReport]], label: str = "") -> str:
    """Fixed-width table in the PPS/UPS/NLL/ECE/Sha. layout."""
    width = max([len(label)] + [len(name) for name, _ in rows])
    header = f"{label:<{width}}  " + "  ".join(f"{c:>6}" for c in REPORT_COLUMNS)
    lines = [header, "-" * len(header)]
    for name, rep in rows:
        lines.append(f"{name:<{width}}  " + "  ".join(f"{c:>6}" for c in rep.table_cells()))
    return "\n".join(lines)


class Strategy(str, Enum):
    point_estimate = "point_estimate"
    mean_of_samples = "mean_of_samples"
    risk_cdf = "risk_cdf"


@dataclass(frozen=True)
class RetrievalReport:
    strategy: Strategy
    ranking: tuple[str, ...]
    recall_at: Mapping[int, float]
    precision_at: Mapping[int, float]
    q_err: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "ranking", tuple(self.ranking))
        ns = sorted(self.recall_at)
        recalls = [self.recall_at[n] for n in ns]
        if any(b < a for a, b in zip(recalls, recalls[1:])):
            raise InvalidInput("recall@N must be nondecreasing in N")
        if any(not 0.0 <= v <= 1.0 for v in list(recalls) + list(self.precision_at.values())):
            raise InvalidInput("recall/precision values must lie in [0, 1]")
        if self.strategy is not Strategy.risk_cdf and self.q_err is not None:
            raise InvalidInput("q_err only applies to the risk_cdf strategy")

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy.value,
            "q_err": self.q_err,
            "ranking": list(self.ranking),
            "recall_at": {str(n): v for n, v in sorted(self.recall_at.items())},
            "precision_at": {str(n): v for n, v in sorted(self.precision_at.items())},
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RetrievalReport":
        return cls(
            strategy=Strategy(d["strategy"]),
            ranking=tuple(d["ranking"]),
            recall_at={int(n): float(v) for n, v in d["recall_at"].items()},
            precision_at={int(n): float(v) for n, v in d["precision_at"].items()},
            q_err=d.get("q_err"),
        )
