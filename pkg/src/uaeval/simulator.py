"""Synthetic datasets with planted, known uncertainty structure.

Generative model for segment ``j`` (``tau`` is set from ``rho``, see
:func:`latent_scale`)::

    s_j        per-segment spread: sigma, or sigma_min + (sigma_max - sigma_min) * U
    v_j        = a_true * s_j**2 + b_true           (true gold-noise variance)
    center_j   = tau * z_j                           z_j ~ N(0, 1)
    gold_j     = center_j + sqrt(v_j) * e_j          e_j ~ N(0, 1)
    x_j[i, r]  = center_j + o_jr + s_j * xi_jir      o_jr ~ N(0, ref_offset_scale**2)
    point_j    = center_j + mean_r(o_jr) + s_j / sqrt(N) * eta_j

With ``a_true = 1, b_true = 0`` the gold is a draw from the distribution the
samples were drawn from, i.e. the fitted Gaussians are calibrated by
construction.

Randomness: uniforms come from numpy's PCG64 bit generator
(``Generator.random``, 53-bit doubles); normals are made from them with the
Box-Muller transform below, so output depends only on PCG64 and IEEE
arithmetic. Draw order is fixed: spreads, z, e, xi, o, eta, lengths.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import InvalidInput
from .ingestion import Dataset
from .types import SegmentRecord

NOISE_MODELS = ("homoscedastic", "heteroscedastic")


@dataclass(frozen=True)
class SimSpec:
    n_segments: int = 1000
    n_samples: int = 100
    n_refs: int = 1
    seed: int = 0
    rho: float = 0.6
    noise_model: str = "heteroscedastic"
    sigma: float = 0.5
    sigma_min: float = 0.1
    sigma_max: float = 1.0
    a_true: float = 1.0
    b_true: float = 0.0
    ref_offset_scale: float = 0.0
    docs_per_dataset: int = 25
    systems: tuple[str, ...] = ("sysA", "sysB", "sysC", "sysD")
    min_len_words: int = 5
    max_len_words: int = 40
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "systems", tuple(str(s) for s in self.systems))
        object.__setattr__(self, "metadata", dict(self.metadata))
        if self.n_segments < 1 or self.n_samples < 1 or self.n_refs < 1:
            raise InvalidInput("n_segments, n_samples and n_refs must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidInput(f"rho must lie in [0, 1], got {self.rho}")
        if self.noise_model not in NOISE_MODELS:
            raise InvalidInput(f"noise_model must be one of {NOISE_MODELS}")
        if self.noise_model == "homoscedastic":
            if not self.sigma >= 0:
                raise InvalidInput("sigma must be >= 0")
        elif not 0 < self.sigma_min <= self.sigma_max:
            raise InvalidInput("need 0 < sigma_min <= sigma_max")
        if self.a_true < 0 or self.b_true < 0:
            raise InvalidInput("miscalibration parameters must be >= 0")
        if self.ref_offset_scale < 0:
            raise InvalidInput("ref_offset_scale must be >= 0")
        if not self.systems:
            raise InvalidInput("need at least one system")
        n_sources = math.ceil(self.n_segments / len(self.systems))
        if not 1 <= self.docs_per_dataset <= n_sources:
            raise InvalidInput(f"docs_per_dataset must lie in [1, {n_sources}]")
        if not 1 <= self.min_len_words <= self.max_len_words:
            raise InvalidInput("need 1 <= min_len_words <= max_len_words")
        latent_scale(self)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["systems"] = list(self.systems)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SimSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise InvalidInput(f"unknown SimSpec fields {sorted(extra)}")
        kw = dict(d)
        if "systems" in kw:
            kw["systems"] = tuple(kw["systems"])
        return cls(**kw)


def expected_noise_variance(spec: SimSpec) -> float:
    if spec.noise_model == "homoscedastic":
        es2 = spec.sigma**2
    else:
        lo, hi = spec.sigma_min, spec.sigma_max
        es2 = (lo * lo + lo * hi + hi * hi) / 3.0
    return spec.a_true * es2 + spec.b_true


def latent_scale(spec: SimSpec) -> float:
    """Std. dev. ``tau`` of the segment centers giving ``corr(gold, center) = rho``."""
    ev = expected_noise_variance(spec)
    if spec.rho == 1.0:
        if ev > 0:
            raise InvalidInput("rho = 1 requires zero gold noise")
        return 1.0
    if ev == 0.0:
        return 1.0
    return math.sqrt(spec.rho**2 / (1.0 - spec.rho**2) * ev)


def box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` standard normals from ``ceil(n / 2)`` uniform pairs."""
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * m)
    out[0::2] = r * np.cos(2.0 * math.pi * u2)
    out[1::2] = r * np.sin(2.0 * math.pi * u2)
    return out[:n]


def generate(spec: SimSpec) -> Dataset:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n, N, R = spec.n_segments, spec.n_samples, spec.n_refs

    if spec.noise_model == "homoscedastic":
        spread = np.full(n, float(spec.sigma))
        rng.random(n)  # keep the draw order identical across noise models
    else:
        spread = spec.sigma_min + (spec.sigma_max - spec.sigma_min) * rng.random(n)
    tau = latent_scale(spec)
    center = tau * box_muller(rng, n)
    noise_sd = np.sqrt(spec.a_true * spread**2 + spec.b_true)
    gold = center + noise_sd * box_muller(rng, n)
    xi = box_muller(rng, n * R * N).reshape(n, R, N)
    offsets = spec.ref_offset_scale * box_muller(rng, n * R).reshape(n, R)
    eta = box_muller(rng, n)
    lengths = spec.min_len_words + np.floor(
        rng.random(n) * (spec.max_len_words - spec.min_len_words + 1)
    ).astype(np.int64)

    samples = center[:, None, None] + offsets[:, :, None] + spread[:, None, None] * xi
    point = center + offsets.mean(axis=1) + spread / math.sqrt(N) * eta

    n_sys = len(spec.systems)
    n_sources = math.ceil(n / n_sys)
    records = []
    for j in range(n):
        source = j // n_sys
        records.append(
            SegmentRecord(
                segment_id=f"seg{j:06d}",
                doc_id=f"doc{source * spec.docs_per_dataset // n_sources:04d}",
                system_id=spec.systems[j % n_sys],
                mt_len_words=int(lengths[j]),
                samples=samples[j].T,
                gold=float(gold[j]),
                point_estimate=float(point[j]),
            )
        )
    metadata = {
        "language_pair": "sim",
        "score_type": "simulated",
        "sampling_method": "mc_dropout",
        "sim_spec": spec.to_dict(),
    }
    metadata.update(spec.metadata)
    return Dataset(tuple(records), metadata)


def true_spreads(spec: SimSpec) -> np.ndarray:
    """The per-segment ``s_j`` that :func:`generate` draws first."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    if spec.noise_model == "homoscedastic":
        return np.full(spec.n_segments, float(spec.sigma))
    return spec.sigma_min + (spec.sigma_max - spec.sigma_min) * rng.random(spec.n_segments)
