"""Dataset files, validation and document-disjoint cross-validation folds.

File format (UTF-8, one JSON object per line)::

    {"metadata": {"language_pair": "en-de", "score_type": "da", ...}}   # optional header
    {"segment_id": "s1", "doc_id": "d1", "system_id": "sysA", "mt_len_words": 12,
     "gold": 0.31, "point_estimate": 0.28, "samples": [[...], [...]]}

``gold`` is a number, a list of per-annotator numbers (averaged), or
``null`` for inference-only data. ``samples`` is reference-major: one list
of N scores per reference, and row ``i`` of every list comes from the same
stochastic model instance.

The tabular import takes one row per sample with the columns
``segment_id, doc_id, system_id, mt_len_words, gold, point_estimate,
ref_index, sample_index, score``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import random
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import InvalidInput, ParseError, SchemaError
from .types import SegmentRecord

logger = logging.getLogger(__name__)

SAMPLING_METHODS = ("mc_dropout", "deep_ensemble", "external")
TABULAR_COLUMNS = (
    "segment_id",
    "doc_id",
    "system_id",
    "mt_len_words",
    "gold",
    "point_estimate",
    "ref_index",
    "sample_index",
    "score",
)

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class Dataset:
    records: tuple[SegmentRecord, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        recs = tuple(self.records)
        object.__setattr__(self, "records", recs)
        meta = dict(self.metadata)
        if not recs:
            raise SchemaError("dataset has no records")
        dup = [s for s, c in Counter(r.segment_id for r in recs).items() if c > 1]
        if dup:
            raise SchemaError(f"duplicate segment ids {sorted(dup)[:5]}", field="segment_id")
        shapes = {r.samples.shape for r in recs}
        if len(shapes) > 1:
            raise SchemaError(f"ragged dataset, sample shapes {sorted(shapes)}", field="samples")
        n, r = next(iter(shapes))
        for key, actual in (("n_samples", n), ("n_refs", r)):
            if key in meta and int(meta[key]) != actual:
                raise SchemaError(f"metadata says {meta[key]}, records have {actual}", field=key)
            meta[key] = actual
        method = meta.setdefault("sampling_method", "external")
        if method not in SAMPLING_METHODS:
            raise SchemaError(f"unknown sampling method {method!r}", field="sampling_method")
        object.__setattr__(self, "metadata", meta)

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return dict(self.metadata) == dict(other.metadata) and self.records == other.records

    @property
    def n_samples(self) -> int:
        return self.records[0].n_samples

    @property
    def n_refs(self) -> int:
        return self.records[0].n_refs

    @property
    def segment_ids(self) -> list[str]:
        return [r.segment_id for r in self.records]

    def sample_tensor(self) -> np.ndarray:
        """Stacked samples, shape ``(segments, N, R)``."""
        return np.stack([r.samples for r in self.records])

    def golds(self) -> np.ndarray:
        missing = [r.segment_id for r in self.records if r.gold is None]
        if missing:
            raise SchemaError(f"{len(missing)} records lack a gold score (e.g. {missing[0]!r})", field="gold")
        return np.array([r.gold for r in self.records])

    def mt_lengths(self) -> np.ndarray:
        return np.array([r.mt_len_words for r in self.records], dtype=np.int64)

    def point_estimates(self) -> tuple[np.ndarray, bool]:
        """Point estimates and whether they came from the file.

        Falls back to the mean over all samples and references when any
        record lacks one.
        """
        if all(r.point_estimate is not None for r in self.records):
            return np.array([r.point_estimate for r in self.records]), True
        return self.sample_tensor().mean(axis=(1, 2)), False

    def subset(self, keep: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in keep), self.metadata)


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, allow_nan=False)


def dumps_dataset(dataset: Dataset) -> str:
    lines = [_dumps({"metadata": dict(sorted(dataset.metadata.items()))})]
    lines += [_dumps(r.to_dict()) for r in dataset.records]
    return "\n".join(lines) + "\n"


def write_dataset(dataset: Dataset, path: PathLike) -> None:
    Path(path).write_text(dumps_dataset(dataset), encoding="utf-8")


def loads_dataset(text: str) -> Dataset:
    metadata: dict[str, Any] = {}
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", line=lineno)
        if "metadata" in obj and len(obj) == 1:
            if records or metadata:
                raise ParseError("metadata header must be the first line", line=lineno)
            if not isinstance(obj["metadata"], dict):
                raise SchemaError("metadata must be an object", field="metadata", line=lineno)
            metadata = obj["metadata"]
            continue
        try:
            records.append(SegmentRecord.from_dict(obj))
        except SchemaError as exc:
            raise SchemaError(exc.detail, field=exc.field, line=lineno) from None
        except (TypeError, ValueError) as exc:
            raise SchemaError(str(exc), line=lineno) from None
    return Dataset(tuple(records), metadata)


def parse_dataset(path: PathLike) -> Dataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8: {exc}") from None
    return loads_dataset(text)


def _num(value: str, name: str, lineno: int, integer: bool = False):
    try:
        x = int(value) if integer else float(value)
    except ValueError:
        raise ParseError(f"column {name!r}: cannot parse {value!r}", line=lineno) from None
    if not integer and not math.isfinite(x):
        raise SchemaError("value must be finite", field=name, line=lineno)
    return x


def loads_tabular(text: str, metadata: Optional[Mapping[str, Any]] = None) -> Dataset:
    """Build a dataset from one-row-per-sample CSV text.

    Records appear in order of first occurrence. ``gold`` and
    ``point_estimate`` may be empty; when present they must agree across a
    segment's rows.
    """
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in TABULAR_COLUMNS if c not in (reader.fieldnames or []) and c != "point_estimate"]
    if missing:
        raise SchemaError(f"missing columns {missing}", field=missing[0])
    segs: "OrderedDict[str, dict]" = OrderedDict()
    for lineno, row in enumerate(reader, start=2):
        sid = row["segment_id"]
        seg = segs.setdefault(
            sid,
            {
                "doc_id": row["doc_id"],
                "system_id": row["system_id"],
                "mt_len_words": _num(row["mt_len_words"], "mt_len_words", lineno, integer=True),
                "gold": row["gold"],
                "point_estimate": row.get("point_estimate") or "",
                "cells": {},
            },
        )
        for key in ("doc_id", "system_id", "gold"):
            if row[key] != seg[key]:
                raise SchemaError("disagrees with earlier rows of the segment", field=key, line=lineno)
        r = _num(row["ref_index"], "ref_index", lineno, integer=True)
        i = _num(row["sample_index"], "sample_index", lineno, integer=True)
        if (i, r) in seg["cells"]:
            raise SchemaError(f"duplicate sample ({i}, {r}) for {sid!r}", field="sample_index", line=lineno)
        seg["cells"][(i, r)] = _num(row["score"], "score", lineno)
    records = []
    for sid, seg in segs.items():
        cells = seg["cells"]
        n = 1 + max(i for i, _ in cells)
        n_refs = 1 + max(r for _, r in cells)
        if len(cells) != n * n_refs or min(min(k) for k in cells) < 0:
            raise SchemaError(f"segment {sid!r} does not fill a {n} x {n_refs} sample grid", field="samples")
        mat = np.empty((n, n_refs))
        for (i, r), v in cells.items():
            mat[i, r] = v
        records.append(
            SegmentRecord(
                segment_id=sid,
                doc_id=seg["doc_id"],
                system_id=seg["system_id"],
                mt_len_words=seg["mt_len_words"],
                samples=mat,
                gold=float(seg["gold"]) if seg["gold"] != "" else None,
                point_estimate=float(seg["point_estimate"]) if seg["point_estimate"] != "" else None,
            )
        )
    return Dataset(tuple(records), metadata or {})


def parse_tabular(path: PathLike, metadata: Optional[Mapping[str, Any]] = None) -> Dataset:
    return loads_tabular(Path(path).read_text(encoding="utf-8"), metadata)


def dumps_tabular(dataset: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABULAR_COLUMNS)
    for rec in dataset.records:
        gold = "" if rec.gold is None else repr(rec.gold)
        pe = "" if rec.point_estimate is None else repr(rec.point_estimate)
        for r in range(rec.n_refs):
            for i in range(rec.n_samples):
                w.writerow([rec.segment_id, rec.doc_id, rec.system_id, rec.mt_len_words, gold, pe, r, i, repr(float(rec.samples[i, r]))])
    return buf.getvalue()


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: Mapping[str, int]

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInput("need at least 2 folds")
        bad = {d: f for d, f in self.assignment.items() if not 0 <= f < self.k}
        if bad:
            raise InvalidInput(f"fold indices out of range: {bad}")
        empty = set(range(self.k)) - set(self.assignment.values())
        if empty:
            raise InvalidInput(f"folds {sorted(empty)} have no documents")
        object.__setattr__(self, "assignment", dict(sorted(self.assignment.items())))

    def docs_in(self, fold: int) -> list[str]:
        return [d for d, f in self.assignment.items() if f == fold]

    def to_dict(self) -> dict:
        return {"k": self.k, "assignment": dict(self.assignment)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "FoldPlan":
        return cls(int(d["k"]), {str(doc): int(f) for doc, f in d["assignment"].items()})


def _greedy(order: list[str], sizes: Mapping[str, int], k: int, rng: Optional[random.Random]) -> dict[str, int]:
    load = [0] * k
    out = {}
    for doc in order:
        low = min(load)
        choices = [f for f in range(k) if load[f] == low]
        f = choices[0] if rng is None else rng.choice(choices)
        out[doc] = f
        load[f] += sizes[doc]
    return out


def _covers_systems(assignment: Mapping[str, int], doc_systems: Mapping[str, set], systems: set, k: int) -> bool:
    seen = [set() for _ in range(k)]
    for doc, f in assignment.items():
        seen[f] |= doc_systems[doc]
    return all(s == systems for s in seen)


def make_folds(dataset: Dataset, k: int = 5, seed: int = 0, attempts: int = 50) -> FoldPlan:
    """Assign whole documents to ``k`` folds, balancing segment counts.

    Documents are shuffled with ``random.Random(seed)``, stably sorted by
    size (largest first) and placed greedily on the least-loaded fold. If a
    fold then misses some MT system, up to ``attempts`` randomized greedy
    orders are tried; when none covers every system in every fold the
    balanced plan is kept and a warning is logged.
    """
    if k < 2:
        raise InvalidInput("need at least 2 folds")
    sizes: Counter = Counter(r.doc_id for r in dataset.records)
    docs = sorted(sizes)
    if len(docs) < k:
        raise InvalidInput(f"{len(docs)} documents cannot fill {k} folds")
    doc_systems: dict[str, set] = {}
    for r in dataset.records:
        doc_systems.setdefault(r.doc_id, set()).add(r.system_id)
    systems = set().union(*doc_systems.values())

    rng = random.Random(seed)
    order = docs[:]
    rng.shuffle(order)
    order.sort(key=lambda d: -sizes[d])
    plan = _greedy(order, sizes, k, None)
    if not _covers_systems(plan, doc_systems, systems, k):
        for _ in range(attempts):
            trial = docs[:]
            rng.shuffle(trial)
            cand = _greedy(trial, sizes, k, rng)
            if _covers_systems(cand, doc_systems, systems, k):
                plan = cand
                break
        else:
            logger.warning("could not place every MT system in every fold; keeping the balanced plan")
    return FoldPlan(k, plan)


def split(dataset: Dataset, plan: FoldPlan, test_fold: int) -> tuple[Dataset, Dataset]:
    """``(validation, test)``: the test fold's documents versus all others."""
    if not 0 <= test_fold < plan.k:
        raise InvalidInput(f"test fold {test_fold} out of range for k={plan.k}")
    unknown = {r.doc_id for r in dataset.records} - set(plan.assignment)
    if unknown:
        raise InvalidInput(f"documents missing from the fold plan: {sorted(unknown)[:5]}")
    val, test = [], []
    for j, r in enumerate(dataset.records):
        (test if plan.assignment[r.doc_id] == test_fold else val).append(j)
    if not val or not test:
        raise InvalidInput("split leaves one side empty")
    return dataset.subset(val), dataset.subset(test)


def standardize_dataset(dataset: Dataset, std_mean: float, std_scale: float) -> Dataset:
    """Apply ``(x - std_mean) / std_scale`` to samples, golds and point estimates."""
    if not std_scale > 0:
        raise InvalidInput("std_scale must be > 0")
    out = []
    for r in dataset.records:
        out.append(
            SegmentRecord(
                segment_id=r.segment_id,
                doc_id=r.doc_id,
                system_id=r.system_id,
                mt_len_words=r.mt_len_words,
                samples=(r.samples - std_mean) / std_scale,
                gold=None if r.gold is None else (r.gold - std_mean) / std_scale,
                point_estimate=None if r.point_estimate is None else (r.point_estimate - std_mean) / std_scale,
            )
        )
    return Dataset(tuple(out), dataset.metadata)
