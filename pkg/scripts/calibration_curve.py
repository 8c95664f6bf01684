"""Per-level coverage before and after affine variance calibration on simulated data.

    python3 scripts/calibration_curve.py --a-true 4 --segments 10000 [--plot curve.png]

Prints a TSV of confidence level, coverage before, coverage after.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from uaeval.calibration import apply_calibration_batch, tune_affine
from uaeval.distribution import GaussianBatch, fit_gaussians
from uaeval.metrics import EceConfig, coverage, ece
from uaeval.simulator import SimSpec, generate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a-true", type=float, default=4.0)
    ap.add_argument("--b-true", type=float, default=0.0)
    ap.add_argument("--segments", type=int, default=10_000)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--plot", default=None, help="write a figure here (needs matplotlib)")
    args = ap.parse_args()

    spec = SimSpec(
        n_segments=args.segments, n_samples=args.samples, seed=args.seed, a_true=args.a_true, b_true=args.b_true
    )
    ds = generate(spec)
    d = GaussianBatch(*fit_gaussians(ds.sample_tensor()[:, :, 0]))
    g = ds.golds()
    # tune on even segments, report on odd ones
    val, test = np.arange(0, len(d), 2), np.arange(1, len(d), 2)
    p = tune_affine((d.mu[val], d.sigma2[val], g[val]))
    pre, post = d[test], apply_calibration_batch(d[test], p)
    levels = EceConfig().levels()
    before, after = coverage(pre, g[test]), coverage(post, g[test])

    print(f"# alpha={p.alpha:.4f} beta={p.beta:.4f} ECE {ece(pre, g[test]):.4f} -> {ece(post, g[test]):.4f}", file=sys.stderr)
    print("level\tcoverage_before\tcoverage_after")
    for lv, b, a in zip(levels, before, after):
        print(f"{lv:.3f}\t{b:.4f}\t{a:.4f}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(4, 4))
        ax.plot([0, 1], [0, 1], color="grey", lw=0.8)
        ax.plot(levels, before, label="before")
        ax.plot(levels, after, label="after")
        ax.set_xlabel("expected confidence level")
        ax.set_ylabel("observed coverage")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot)


if __name__ == "__main__":
    main()
