"""Regenerate the shipped test fixtures and, with ``--goldens``, the golden CLI outputs.

    python3 scripts/make_fixtures.py            # fixtures only
    python3 scripts/make_fixtures.py --goldens  # fixtures, then goldens
"""

from __future__ import annotations

import argparse
import csv
import json
import shutil
import tempfile
from pathlib import Path

import numpy as np

from uaeval.cli import main as cli_main
from uaeval.ingestion import Dataset, write_dataset
from uaeval.simulator import SimSpec, generate
from uaeval.types import SegmentRecord

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"
GOLDEN = ROOT / "tests" / "golden"

SIM_SPECS = {
    "sim25.jsonl": SimSpec(n_segments=400, n_samples=20, seed=7, docs_per_dataset=25),
    "sim_r3.jsonl": SimSpec(
        n_segments=300, n_samples=20, n_refs=3, seed=11, ref_offset_scale=1.0, docs_per_dataset=15
    ),
    # every fitted variance collapses to the same floor
    "homoscedastic.jsonl": SimSpec(
        n_segments=400, n_samples=10, seed=5, noise_model="homoscedastic", sigma=0.0, b_true=0.25
    ),
}

# (gold, point estimate, per-reference sample offsets) for a 20-segment set:
# 4 documents x 5 segments, systems alternate, N = 4 samples, R = 2 references.
_HANDMADE = [
    (0.62, 0.55, ((0.10, -0.05, 0.00, 0.07), (0.02, -0.08, 0.04, 0.01))),
    (0.15, 0.20, ((-0.20, 0.10, 0.05, 0.15), (0.00, -0.10, 0.20, -0.05))),
    (-0.40, -0.10, ((0.30, -0.25, 0.10, -0.05), (0.15, -0.30, 0.05, 0.20))),
    (0.05, 0.01, ((0.01, -0.01, 0.02, -0.02), (0.00, 0.01, -0.01, 0.02))),
    (-1.10, -0.70, ((0.40, -0.35, 0.20, -0.10), (0.25, -0.45, 0.30, 0.05))),
    (0.80, 0.75, ((0.05, 0.00, -0.05, 0.02), (0.03, -0.02, 0.00, 0.01))),
    (0.33, 0.40, ((-0.10, 0.10, 0.00, 0.05), (0.08, -0.06, 0.02, -0.04))),
    (-0.25, -0.30, ((0.20, -0.20, 0.10, -0.10), (0.10, -0.15, 0.05, 0.00))),
    (0.10, 0.20, ((-0.05, 0.05, 0.15, -0.15), (0.00, 0.10, -0.10, 0.05))),
    (-0.60, -0.45, ((0.25, -0.20, 0.00, 0.15), (-0.10, 0.30, -0.25, 0.05))),
    (0.45, 0.50, ((0.02, -0.03, 0.01, 0.00), (-0.01, 0.02, 0.03, -0.02))),
    (-0.05, 0.10, ((0.15, -0.10, 0.05, -0.20), (0.10, 0.00, -0.05, 0.15))),
    (0.90, 0.70, ((-0.10, 0.05, 0.10, 0.00), (0.05, -0.05, 0.15, 0.10))),
    (-0.85, -0.95, ((0.35, -0.30, 0.15, 0.00), (-0.20, 0.25, 0.10, -0.05))),
    (0.20, 0.25, ((0.00, 0.05, -0.05, 0.10), (0.02, -0.02, 0.04, -0.04))),
    (0.55, 0.35, ((0.20, -0.10, 0.00, 0.10), (0.15, 0.05, -0.05, 0.25))),
    (-0.15, -0.20, ((0.05, -0.05, 0.10, -0.10), (0.00, 0.05, -0.05, 0.10))),
    (0.00, 0.05, ((0.10, -0.10, 0.05, 0.00), (-0.05, 0.05, 0.10, -0.10))),
    (-1.30, -1.00, ((0.50, -0.40, 0.25, -0.20), (0.30, -0.35, 0.45, -0.10))),
    (0.70, 0.65, ((0.03, 0.00, -0.03, 0.05), (0.01, -0.04, 0.02, 0.00))),
]


def handmade_dataset() -> Dataset:
    records = []
    for j, (gold, point, offsets) in enumerate(_HANDMADE):
        samples = point + np.asarray(offsets, dtype=np.float64).T
        records.append(
            SegmentRecord(
                segment_id=f"h{j:02d}",
                doc_id=f"d{j // 5}",
                system_id=("sysA", "sysB")[j % 2],
                mt_len_words=6 + (7 * j) % 23,
                samples=samples,
                gold=gold,
                point_estimate=point,
            )
        )
    return Dataset(tuple(records), {"language_pair": "xx-yy", "score_type": "da", "sampling_method": "mc_dropout"})


# Worst-ranked En-De segments by averaged MQM penalty, with and without
# division by the MT word count. Each row: label, MQM penalty, MT words,
# listed in the raw ranking, listed in the length-normalized ranking.
# "highlighted" marks rows present in both listings.
MQM_ROWS = [
    ("pelosi-anfaellige", 17.67, 6, True, True),
    ("pelosi-anfaellige-impeachment", 17.33, 6, True, True),
    ("pelosi-verletzliche", 17.67, 4, True, True),
    ("tax-officials", 17.0, 10, False, True),
    ("hideous", 20.07, 12, True, True),
    ("khloe", 10.37, 8, False, True),
    ("parents-5-monaten", 18.67, 15, True, True),
    ("who-concert", 13.67, 11, False, True),
    ("parents-5-monats-alt", 18.67, 15, True, True),
    ("pelosi-fuer", 9.67, 7, False, True),
    ("baloch-leben", 15.37, 14, False, True),
    ("pelosi-gegen", 9.33, 7, False, True),
    ("whitehurst-wie", 12.67, 12, False, True),
    ("whitehurst-als", 12.4, 12, False, True),
    ("parents-die", 18.33, 17, True, True),
    ("walmart", 11.33, 12, False, True),
    ("baloch-lebenslang", 14.03, 11, False, True),
    ("sacramento-ermittlungen", 18.0, 14, True, True),
    ("plastic-surgeon", 11.0, 10, False, True),
    ("barr", 22.33, 43, True, False),
    ("lottery", 22.33, 42, True, False),
    ("modi", 19.67, 62, True, False),
    ("hiv-derzeit", 19.07, 83, True, False),
    ("nba", 17.67, 40, True, False),
    ("tristan", 17.43, 26, True, False),
    ("blanks", 17.43, 22, True, False),
    ("whistleblower", 17.43, 45, True, False),
    ("hiv-86", 17.4, 68, True, False),
    ("sacramento-untersuchung", 17.33, 15, True, False),
    ("hiv-gegenwaertig", 17.33, 84, True, False),
]


def write_mqm(path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "mqm", "mt_len_words", "in_raw", "in_normalized", "highlighted"])
        for label, mqm, words, raw, norm in MQM_ROWS:
            w.writerow([label, repr(mqm), words, int(raw), int(norm), int(raw and norm)])


def write_fixtures() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_dataset(handmade_dataset(), FIXTURES / "handmade20.jsonl")
    for name, spec in SIM_SPECS.items():
        write_dataset(generate(spec), FIXTURES / name)
    (FIXTURES / "simspec.json").write_text(
        json.dumps(SimSpec(n_segments=120, n_samples=8, n_refs=2, seed=3, docs_per_dataset=6).to_dict(), indent=2)
        + "\n",
        encoding="utf-8",
    )
    write_mqm(FIXTURES / "mqm_worst.csv")


def load_manifest() -> list[dict]:
    return json.loads((GOLDEN / "manifest.json").read_text(encoding="utf-8"))


def run_manifest_entry(entry: dict, out_dir: Path) -> int:
    argv = [a.format(fixtures=str(FIXTURES), out=str(out_dir)) for a in entry["argv"]]
    return cli_main(argv)


def write_goldens() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        for entry in load_manifest():
            code = run_manifest_entry(entry, Path(tmp))
            if code != 0:
                raise SystemExit(f"{entry['name']} exited with {code}")
            for name in entry["outputs"]:
                shutil.copyfile(Path(tmp) / name, GOLDEN / name)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--goldens", action="store_true", help="also rewrite the golden CLI outputs")
    args = ap.parse_args()
    write_fixtures()
    if args.goldens:
        write_goldens()


if __name__ == "__main__":
    main()
