"""Reduce an N x R score matrix to N scores by averaging over references.

Row ``i`` of the matrix must hold the scores of the same stochastic model
instance (dropout mask or ensemble member) against every reference.
"""

from __future__ import annotations

import itertools
import random
from math import comb
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInput


def _check_subset(subset: Sequence[int], n_refs: int) -> list[int]:
    idx = [int(i) for i in subset]
    if not idx:
        raise InvalidInput("reference subset is empty")
    if len(set(idx)) != len(idx):
        raise InvalidInput(f"duplicate reference indices in {idx}")
    bad = [i for i in idx if not 0 <= i < n_refs]
    if bad:
        raise InvalidInput(f"reference indices {bad} out of range for R={n_refs}")
    return idx


def aggregate_references(samples, subset: Optional[Sequence[int]] = None) -> np.ndarray:
    """Pointwise mean over the selected reference columns.

    Args:
        samples: array of shape ``(N, R)``.
        subset: reference column indices to average; all columns by default.

    Returns:
        Array of length ``N``.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInput("samples must be a nonempty rectangular N x R matrix")
    if subset is None:
        cols = arr
    else:
        cols = arr[:, _check_subset(subset, arr.shape[1])]
    if cols.shape[1] == 1:
        return cols[:, 0].copy()
    return cols.mean(axis=1)


def aggregate_batch(samples: np.ndarray, subset: Optional[Sequence[int]] = None) -> np.ndarray:
    """Vectorized :func:`aggregate_references` over a ``(segments, N, R)`` stack."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidInput("expected a (segments, N, R) array")
    if subset is not None:
        arr = arr[:, :, _check_subset(subset, arr.shape[2])]
    if arr.shape[2] == 1:
        return arr[:, :, 0].copy()
    return arr.mean(axis=2)


def sample_reference_subsets(
    n_refs: int,
    k: int,
    seed: int = 0,
    max_subsets: Optional[int] = None,
) -> list[list[int]]:
    """Size-``k`` reference subsets, sorted ascending within each subset.

    All ``C(n_refs, k)`` subsets are enumerated in lexicographic order when
    ``max_subsets`` is ``None`` or not smaller than that count. Otherwise
    ``max_subsets`` distinct subsets are drawn without replacement using
    ``random.Random(seed)`` and returned in lexicographic order.
    """
    if n_refs < 1:
        raise InvalidInput("n_refs must be positive")
    if not 1 <= k <= n_refs:
        raise InvalidInput(f"subset size k={k} must lie in [1, {n_refs}]")
    total = comb(n_refs, k)
    if max_subsets is None or max_subsets >= total:
        return [list(c) for c in itertools.combinations(range(n_refs), k)]
    if max_subsets < 1:
        raise InvalidInput("max_subsets must be positive")
    rng = random.Random(seed)
    chosen: set[tuple[int, ...]] = set()
    while len(chosen) < max_subsets:
        chosen.add(tuple(sorted(rng.sample(range(n_refs), k))))
    return [list(c) for c in sorted(chosen)]
