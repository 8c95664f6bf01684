"""Sharpness and NLL of single-reference subsets versus all-reference averaging.

    python3 scripts/multiref_study.py --seeds 5 --refs 3 --offset 1.0
"""

from __future__ import annotations

import argparse

from uaeval.pipeline import RunConfig, multiref
from uaeval.simulator import SimSpec, generate
from uaeval.types import format_report_table


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--segments", type=int, default=1000)
    ap.add_argument("--samples", type=int, default=30)
    ap.add_argument("--refs", type=int, default=3)
    ap.add_argument("--offset", type=float, default=1.0, help="std. dev. of the per-reference score offsets")
    ap.add_argument("--k", type=int, default=3)
    args = ap.parse_args()

    patterns = [f"S-{k}" for k in range(1, args.refs)] + ["Mul"]
    for seed in range(args.seeds):
        ds = generate(
            SimSpec(
                n_segments=args.segments, n_samples=args.samples, n_refs=args.refs, seed=seed,
                ref_offset_scale=args.offset, docs_per_dataset=25,
            )
        )
        res = multiref(ds, patterns, RunConfig(k=args.k, seed=seed))
        print(f"seed {seed}")
        print(format_report_table([(p, res[p]["mean"]) for p in patterns]))
        print()


if __name__ == "__main__":
    main()
