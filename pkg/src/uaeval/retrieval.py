"""Critical-error detection: rank segments worst-first and score the ranking.

Golds follow a higher-is-better convention; MQM penalties must be negated
upstream so that the worst translations have the lowest scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .distribution import GaussianBatch, Gaussians, as_batch
from .errors import InvalidInput
from .types import RetrievalReport, Strategy


@dataclass(frozen=True)
class RiskConfig:
    """Detection settings.

    ``tune_recall_points`` defaults to the target-set size and twice that
    size when left empty.
    """

    worst_fraction: float = 0.02
    q_err: Union[float, str] = "tune"
    tune_recall_points: tuple[int, ...] = ()
    length_normalize: bool = True
    tune_rounds: int = 2

    def __post_init__(self):
        if not 0.0 < self.worst_fraction < 1.0:
            raise InvalidInput(f"worst_fraction must lie in (0, 1), got {self.worst_fraction}")
        if isinstance(self.q_err, str):
            if self.q_err != "tune":
                raise InvalidInput("q_err must be a number or 'tune'")
        elif not math.isfinite(self.q_err):
            raise InvalidInput("q_err must be finite")
        pts = tuple(int(n) for n in self.tune_recall_points)
        if any(n < 1 for n in pts):
            raise InvalidInput("recall points must be positive")
        object.__setattr__(self, "tune_recall_points", pts)


def normalize_by_length(gold: float, mt_len_words: int) -> float:
    """Per-word score, so long translations are not flagged for many minor errors."""
    if isinstance(mt_len_words, bool) or int(mt_len_words) != mt_len_words or mt_len_words < 1:
        raise InvalidInput(f"MT length must be a positive integer, got {mt_len_words!r}")
    return gold / mt_len_words


def target_size(n_segments: int, worst_fraction: float) -> int:
    # the epsilon keeps e.g. 0.29 * 100 from flooring to 28
    return int(math.floor(worst_fraction * n_segments + 1e-9))


def build_target_set(
    segment_ids: Sequence[str],
    golds: Sequence[float],
    worst_fraction: Optional[float] = None,
    n_worst: Optional[int] = None,
) -> set[str]:
    """Ids of the ``floor(worst_fraction * n)`` (or ``n_worst``) lowest golds.

    Equal golds are ordered by segment id.
    """
    ids = [str(s) for s in segment_ids]
    g = np.asarray(golds, dtype=np.float64).ravel()
    if len(ids) != g.size:
        raise InvalidInput(f"{len(ids)} ids but {g.size} golds")
    if len(set(ids)) != len(ids):
        raise InvalidInput("segment ids must be unique")
    if (worst_fraction is None) == (n_worst is None):
        raise InvalidInput("give exactly one of worst_fraction and n_worst")
    if n_worst is None:
        if not 0.0 < worst_fraction < 1.0:
            raise InvalidInput("worst_fraction must lie in (0, 1)")
        n_worst = target_size(len(ids), worst_fraction)
    if not 1 <= n_worst <= len(ids):
        raise InvalidInput(f"target set size {n_worst} is empty or exceeds the dataset ({len(ids)})")
    order = sorted(range(len(ids)), key=lambda j: (g[j], ids[j]))
    return {ids[j] for j in order[:n_worst]}


def risk_scores(dists: Gaussians, q_err: float) -> np.ndarray:
    """Standardized threshold distance ``(q_err - mu) / sigma``.

    ``P(Q <= q_err)`` is a strictly increasing function of this value, so
    sorting by it gives the probability ranking without saturating to 0 or
    1 in the tails.
    """
    b = as_batch(dists)
    return (q_err - b.mu) / np.sqrt(b.sigma2)


def rank(
    segment_ids: Sequence[str],
    scores: Union[Gaussians, Sequence[float]],
    strategy: Union[Strategy, str],
    q_err: Optional[float] = None,
) -> list[str]:
    """Order segment ids worst-first.

    ``point_estimate`` sorts ascending by the given point scores;
    ``mean_of_samples`` ascending by the predicted means; ``risk_cdf``
    descending by ``P(Q <= q_err)``, then ascending by mean. Remaining ties
    go to the smaller segment id.
    """
    strategy = Strategy(strategy)
    ids = [str(s) for s in segment_ids]
    if strategy is Strategy.point_estimate:
        try:
            key1 = np.asarray(scores, dtype=np.float64).ravel()
        except (TypeError, ValueError):
            key1 = as_batch(scores).mu
        key2 = np.zeros_like(key1)
    else:
        b = as_batch(scores)
        if strategy is Strategy.mean_of_samples:
            key1, key2 = b.mu, np.zeros(len(b))
        else:
            if q_err is None or not math.isfinite(q_err):
                raise InvalidInput("risk_cdf ranking needs a finite q_err")
            key1, key2 = -risk_scores(b, q_err), b.mu
    if key1.size != len(ids):
        raise InvalidInput(f"{len(ids)} ids but {key1.size} scores")
    order = sorted(range(len(ids)), key=lambda j: (key1[j], key2[j], ids[j]))
    return [ids[j] for j in order]


def recall_precision_at(
    ranking: Sequence[str], target_set: Iterable[str], n_values: Iterable[int]
) -> tuple[dict[int, float], dict[int, float]]:
    targets = set(target_set)
    if not targets:
        raise InvalidInput("empty target set")
    ranking = list(ranking)
    ns = sorted({int(n) for n in n_values})
    if any(n < 1 for n in ns):
        raise InvalidInput("N must be positive")
    hits = np.cumsum([1 if s in targets else 0 for s in ranking]) if ranking else np.zeros(0, dtype=int)
    recall, precision = {}, {}
    for n in ns:
        h = int(hits[min(n, len(ranking)) - 1]) if ranking else 0
        recall[n] = h / len(targets)
        precision[n] = h / n
    return recall, precision


def _mean_recall(z_order_keys, mu, target_mask, points, ids_rank) -> float:
    order = np.lexsort((ids_rank, mu, z_order_keys))
    hits = np.cumsum(target_mask[order])
    n_t = target_mask.sum()
    return math.fsum(hits[min(n, hits.size) - 1] / n_t for n in points) / len(points)


def tune_q_err(validation, cfg: RiskConfig = RiskConfig(), candidates: Optional[Sequence[float]] = None) -> float:
    """Threshold maximizing mean recall@N of the risk ranking on validation.

    Args:
        validation: iterable of ``(QualityGaussian, gold)`` pairs (golds
            already length-normalized if wanted), or a
            ``(GaussianBatch, golds)`` tuple.
        cfg: target fraction and recall points.
        candidates: explicit threshold grid; by default eleven evenly spaced
            points spanning the validation means, refined ``cfg.tune_rounds``
            times around the incumbent.

    Ties go to the smaller threshold.
    """
    if isinstance(validation, tuple) and len(validation) == 2 and isinstance(validation[0], GaussianBatch):
        dists, golds = validation
        b = as_batch(dists)
        g = np.asarray(golds, dtype=np.float64).ravel()
    else:
        rows = list(validation)
        if not rows:
            raise InvalidInput("empty validation set")
        b = as_batch([r[0] for r in rows])
        g = np.asarray([r[1] for r in rows], dtype=np.float64)
    n = len(b)
    if n == 0:
        raise InvalidInput("empty validation set")
    if g.size != n:
        raise InvalidInput("validation columns differ in length")
    ids = [f"{j:09d}" for j in range(n)]
    n0 = max(1, target_size(n, cfg.worst_fraction))
    targets = build_target_set(ids, g, n_worst=n0)
    mask = np.array([s in targets for s in ids], dtype=np.int64)
    points = cfg.tune_recall_points or (n0, 2 * n0)
    sigma = np.sqrt(b.sigma2)
    tiebreak = np.arange(n)

    def score(chi: float) -> float:
        return _mean_recall(-(chi - b.mu) / sigma, b.mu, mask, points, tiebreak)

    def better(c, best):
        return best is None or c[0] > best[0] or (c[0] == best[0] and c[1] < best[1])

    best = None
    if candidates is not None:
        cands = [float(c) for c in candidates]
        if not cands:
            raise InvalidInput("empty threshold grid")
        for c in cands:
            cur = (score(c), c)
            if better(cur, best):
                best = cur
        return best[1]

    lo, hi = float(b.mu.min()), float(b.mu.max())
    step = (hi - lo) / 10.0
    for c in np.linspace(lo, hi, 11).tolist():
        cur = (score(c), c)
        if better(cur, best):
            best = cur
    for _ in range(cfg.tune_rounds):
        if step == 0.0:
            break
        center = best[1]
        for c in np.linspace(center - step, center + step, 11).tolist():
            cur = (score(c), c)
            if better(cur, best):
                best = cur
        step /= 5.0
    return best[1]


def retrieval_report(
    segment_ids: Sequence[str],
    scores,
    strategy: Union[Strategy, str],
    target_set: Iterable[str],
    n_values: Iterable[int],
    q_err: Optional[float] = None,
) -> RetrievalReport:
    strategy = Strategy(strategy)
    ranking = rank(segment_ids, scores, strategy, q_err)
    recall, precision = recall_precision_at(ranking, target_set, n_values)
    return RetrievalReport(
        strategy=strategy,
        ranking=tuple(ranking),
        recall_at=recall,
        precision_at=precision,
        q_err=q_err if strategy is Strategy.risk_cdf else None,
    )


def curve_table(reports: Sequence[RetrievalReport]) -> str:
    """Tab-separated ``N``, then recall and precision columns per strategy."""
    if not reports:
        raise InvalidInput("no reports")
    ns = sorted(reports[0].recall_at)
    header = ["N"]
    for r in reports:
        header += [f"recall_{r.strategy.value}", f"precision_{r.strategy.value}"]
    lines = ["\t".join(header)]
    for n in ns:
        row = [str(n)]
        for r in reports:
            row += [repr(float(r.recall_at[n])), repr(float(r.precision_at[n]))]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
