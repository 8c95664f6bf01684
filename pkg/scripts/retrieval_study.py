"""Recall@N of the three ranking strategies on simulated heteroscedastic data, over many seeds.

    python3 scripts/retrieval_study.py --seeds 20 --segments 10000

Calibration and the risk threshold are tuned on the first half of each
dataset; targets and rankings come from the second half.
"""

from __future__ import annotations

import argparse

import numpy as np

from uaeval.calibration import apply_calibration_batch, tune_affine
from uaeval.distribution import GaussianBatch
from uaeval.retrieval import RiskConfig, build_target_set, rank, recall_precision_at, tune_q_err
from uaeval.simulator import SimSpec, generate

MULTIPLES = (1, 2, 5, 10)


def run(seed: int, args) -> dict[str, list[float]]:
    ds = generate(
        SimSpec(n_segments=args.segments, n_samples=args.samples, seed=seed, rho=args.rho, docs_per_dataset=50)
    )
    d = GaussianBatch.from_samples(ds.sample_tensor()[:, :, 0])
    g, ids, h = ds.golds(), ds.segment_ids, len(ds) // 2
    p = tune_affine((d.mu[:h], d.sigma2[:h], g[:h]))
    val, test = apply_calibration_batch(d[:h], p), apply_calibration_batch(d[h:], p)
    q = tune_q_err((val, g[:h]), RiskConfig(worst_fraction=args.worst))
    targets = build_target_set(ids[h:], g[h:], args.worst)
    ns = [m * len(targets) for m in MULTIPLES]
    point = np.array([r.point_estimate for r in ds.records[h:]])
    out = {}
    for name, ranking in (
        ("point_estimate", rank(ids[h:], point, "point_estimate")),
        ("mean_of_samples", rank(ids[h:], test, "mean_of_samples")),
        ("risk_cdf", rank(ids[h:], test, "risk_cdf", q)),
    ):
        rec, _ = recall_precision_at(ranking, targets, ns)
        out[name] = [rec[n] for n in ns]
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--segments", type=int, default=10_000)
    ap.add_argument("--samples", type=int, default=30)
    ap.add_argument("--rho", type=float, default=0.6)
    ap.add_argument("--worst", type=float, default=0.02)
    args = ap.parse_args()

    totals: dict[str, np.ndarray] = {}
    for seed in range(args.seeds):
        for name, recalls in run(seed, args).items():
            totals[name] = totals.get(name, 0) + np.array(recalls)
    print("strategy".ljust(16) + "".join(f"  R@{m}x".ljust(9) for m in MULTIPLES))
    for name, tot in totals.items():
        print(name.ljust(16) + "".join(f"  {v / args.seeds:.3f}  " for v in tot))


if __name__ == "__main__":
    main()
