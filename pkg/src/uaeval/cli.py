"""Command-line front end.

Exit codes: 0 success, 2 ParseError, 3 SchemaError, 4 InvalidInput (also
missing files), 5 NoFeasibleCalibration, 6 DegenerateDistribution,
7 DegenerateInput, 8 UndefinedCorrelation, 64 bad command-line usage,
1 anything else.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .errors import InvalidInput, UaevalError
from .ingestion import make_folds, parse_dataset, parse_tabular, write_dataset
from .metrics import mean_report
from .pipeline import (
    COMBINE_NOTE,
    DetectConfig,
    NonparametricReport,
    RunConfig,
    calibrate_dataset,
    cross_validate,
    detect,
    multiref,
)
from .retrieval import RiskConfig, curve_table
from .simulator import SimSpec, generate
from .types import REPORT_COLUMNS, Strategy, format_report_table

SEED_ENV = "UAEVAL_SEED"
USAGE_EXIT = 64

log = logging.getLogger("uaeval")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InvalidInput(f"{SEED_ENV}={raw!r} is not an integer") from None


def _dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_report(path: Optional[str], doc: dict, table: str) -> None:
    """Table to stdout; with ``--report P`` also JSON to P and the table to P with a .txt suffix."""
    sys.stdout.write(table)
    if path:
        p = Path(path)
        p.write_text(_dump_json(doc), encoding="utf-8")
        p.with_suffix(".txt").write_text(table, encoding="utf-8")


def _load_dataset(path: str, tabular: bool):
    if not Path(path).is_file():
        raise InvalidInput(f"no such dataset file: {path}")
    return parse_tabular(path) if tabular else parse_dataset(path)


def _parse_refs(value: str) -> Optional[tuple[int, ...]]:
    if value == "all":
        return None
    try:
        refs = tuple(int(x) for x in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--refs expects 'all' or comma-separated indices, got {value!r}") from None
    return refs


def _parse_q_err(value: str):
    if value == "tune":
        return value
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("--q-err expects 'tune' or a number") from None


def _np_table(rows: Sequence[tuple[str, NonparametricReport]], label: str) -> str:
    width = max([len(label)] + [len(n) for n, _ in rows])
    header = f"{label:<{width}}  " + "  ".join(f"{c:>6}" for c in (REPORT_COLUMNS[0], REPORT_COLUMNS[3]))
    lines = [header, "-" * len(header)]
    for name, rep in rows:
        lines.append(f"{name:<{width}}  " + "  ".join(f"{c:>6}" for c in rep.table_cells()))
    return "\n".join(lines)


def _table(rows, label: str) -> str:
    if rows and isinstance(rows[0][1], NonparametricReport):
        return _np_table(rows, label)
    return format_report_table(rows, label)


def cmd_simulate(args) -> int:
    spec_path = Path(args.spec)
    if not spec_path.is_file():
        raise InvalidInput(f"no such spec file: {args.spec}")
    try:
        raw = json.loads(spec_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"spec file is not valid JSON: {exc.msg}") from None
    if args.seed is not None:
        raw["seed"] = args.seed
    spec = SimSpec.from_dict(raw)
    ds = generate(spec)
    write_dataset(ds, args.out)
    print(f"wrote {len(ds)} segments ({ds.n_samples} samples x {ds.n_refs} refs) to {args.out}")
    return 0


def _run_config(args) -> RunConfig:
    return RunConfig(
        k=args.k,
        seed=args.seed,
        method=getattr(args, "method", "parametric"),
        ece_bins=args.ece_bins,
        refs=args.refs,
        min_sigma2=args.min_sigma2,
    )


def cmd_evaluate(args) -> int:
    ds = _load_dataset(args.dataset, args.tabular)
    cv = cross_validate(ds, _run_config(args))
    rows = [(f"fold {f.fold}", f.report) for f in cv.folds] + [("mean", cv.mean)]
    table = f"# {args.method}, k={cv.config.k}, ECE bins={cv.config.bins}; {COMBINE_NOTE}\n"
    table += _table(rows, "") + "\n"
    _write_report(args.report, cv.to_dict(), table)
    return 0


def cmd_calibrate(args) -> int:
    ds = _load_dataset(args.dataset, args.tabular)
    params = calibrate_dataset(ds, _run_config(args))
    _write(args.out, _dump_json(params.to_dict()))
    return 0


def cmd_detect(args) -> int:
    ds = _load_dataset(args.dataset, args.tabular)
    strategies = [s.value for s in Strategy] if "all" in args.strategy else args.strategy
    cfg = DetectConfig(
        risk=RiskConfig(
            worst_fraction=args.worst_fraction,
            q_err=args.q_err,
            length_normalize=args.length_normalize,
        ),
        strategies=tuple(dict.fromkeys(strategies)),
        k=args.k,
        test_fold=args.test_fold,
        seed=args.seed,
        min_sigma2=args.min_sigma2,
        refs=args.refs,
    )
    result = detect(ds, cfg)
    n0 = len(result.target_set)
    marks = sorted({n for n in (n0, 2 * n0, 5 * n0, 10 * n0) if n <= result.n_test})
    header = "strategy".ljust(16) + "".join(f"  R@{n:<5} P@{n:<5}" for n in marks)
    lines = [
        f"# worst {cfg.risk.worst_fraction:g} of {result.n_test} test segments -> {n0} targets; "
        f"length_normalize={cfg.risk.length_normalize}; q_err={result.q_err}",
        header,
        "-" * len(header),
    ]
    for r in result.reports:
        cells = "".join(f"  {r.recall_at[n]:<7.3f} {r.precision_at[n]:<7.3f}" for n in marks)
        lines.append(r.strategy.value.ljust(16) + cells)
    table = "\n".join(lines) + "\n"
    _write_report(args.report, result.to_dict(), table)
    if args.curves:
        _write(args.curves, curve_table(result.reports))
    if args.plot:
        _plot_curves(result.reports, args.plot)
    return 0


def _plot_curves(reports, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "uaeval"
    fig, (ax_r, ax_p) = plt.subplots(1, 2, figsize=(9, 3.5))
    for r in reports:
        ns = sorted(r.recall_at)
        ax_r.plot(ns, [r.recall_at[n] for n in ns], label=r.strategy.value)
        ax_p.plot(ns, [r.precision_at[n] for n in ns], label=r.strategy.value)
    ax_r.set_xlabel("N")
    ax_r.set_ylabel("Recall@N")
    ax_p.set_xlabel("N")
    ax_p.set_ylabel("Precision@N")
    ax_r.legend()
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None} if path.endswith(".svg") else None)
    plt.close(fig)


def cmd_multiref(args) -> int:
    ds = _load_dataset(args.dataset, args.tabular)
    patterns = args.pattern or (["S-1", "S-2", "Mul"] if ds.n_refs >= 2 else ["S-1", "Mul"])
    cfg = _run_config(args)
    res = multiref(ds, patterns, cfg, args.max_subsets)
    rows, doc = [], {"note": COMBINE_NOTE + "; S-k rows average the listed subsets", "method": cfg.method, "patterns": {}}
    for pattern in patterns:
        entry = res[pattern]
        for sub, rep in entry["subsets"]:
            rows.append((f"{pattern} {{{','.join(map(str, sub))}}}", rep))
        n_seg = entry["subsets"][0][1].n_segments
        mean = dataclasses.replace(entry["mean"], n_segments=n_seg)
        rows.append((f"{pattern} mean", mean))
        doc["patterns"][pattern] = {
            "subsets": [{"refs": sub, "report": rep.to_dict()} for sub, rep in entry["subsets"]],
            "mean": mean.to_dict(),
        }
    table = _table(rows, "") + "\n"
    _write_report(args.report, doc, table)
    return 0


def cmd_folds(args) -> int:
    ds = _load_dataset(args.dataset, args.tabular)
    plan = make_folds(ds, args.k, args.seed)
    counts = [0] * plan.k
    for r in ds.records:
        counts[plan.assignment[r.doc_id]] += 1
    doc = plan.to_dict()
    doc["segments_per_fold"] = counts
    _write(args.out, _dump_json(doc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uaeval", description="Uncertainty-aware evaluation of MT quality scores.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="JSON file of option defaults, keyed by command; flags take precedence")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, with_eval=True):
        sp.add_argument("dataset")
        sp.add_argument("--tabular", action="store_true", help="read one-row-per-sample CSV instead of JSON lines")
        sp.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")
        sp.add_argument("--k", type=int, default=5)
        sp.add_argument("--refs", type=_parse_refs, default=None, help="'all' or comma-separated reference indices")
        sp.add_argument("--min-sigma2", type=float, default=1e-6, dest="min_sigma2")
        if with_eval:
            sp.add_argument("--ece-bins", type=int, default=None, dest="ece_bins")

    sp = sub.add_parser("simulate", help="generate a synthetic dataset from a JSON SimSpec")
    sp.add_argument("spec")
    sp.add_argument("out")
    sp.add_argument("--seed", type=int, default=None, help="override the seed in the SimSpec file")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("evaluate", help="k-fold evaluation with the five indicators")
    common(sp)
    sp.add_argument("--method", choices=("parametric", "nonparametric", "baseline"), default="parametric")
    sp.add_argument("--report", default=None)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("calibrate", help="fit standardization and variance calibration on a dataset")
    common(sp)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("detect", help="critical-error retrieval on a held-out fold")
    common(sp, with_eval=False)
    sp.add_argument("--worst-fraction", type=float, default=0.02, dest="worst_fraction")
    sp.add_argument(
        "--strategy", action="append", choices=["all"] + [s.value for s in Strategy], default=None
    )
    sp.add_argument("--length-normalize", action=argparse.BooleanOptionalAction, default=True, dest="length_normalize")
    sp.add_argument("--q-err", type=_parse_q_err, default="tune", dest="q_err")
    sp.add_argument("--test-fold", type=int, default=0, dest="test_fold")
    sp.add_argument("--report", default=None)
    sp.add_argument("--curves", default=None, help="write the N/recall/precision table here")
    sp.add_argument("--plot", default=None, help="write a recall/precision figure (needs matplotlib)")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("multiref", help="compare single-reference subsets with all-reference averaging")
    common(sp)
    sp.add_argument("--pattern", action="append", default=None, help="S-<k> or Mul; repeatable")
    sp.add_argument("--max-subsets", type=int, default=None, dest="max_subsets")
    sp.add_argument("--method", choices=("parametric", "nonparametric", "baseline"), default="parametric")
    sp.add_argument("--report", default=None)
    sp.set_defaults(func=cmd_multiref)

    sp = sub.add_parser("folds", help="write the document-disjoint fold assignment")
    common(sp, with_eval=False)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_folds)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = Path(known.config)
    if not path.is_file():
        raise InvalidInput(f"no such config file: {known.config}")
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"config file is not valid JSON: {exc.msg}") from None
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for command, defaults in cfg.items():
        if command not in subparsers.choices:
            raise InvalidInput(f"config names unknown command {command!r}")
        subparsers.choices[command].set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help, --version and usage errors
            return exc.code if isinstance(exc.code, int) else USAGE_EXIT
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
        if getattr(args, "seed", None) is None and args.command != "simulate":
            args.seed = _default_seed()
        if args.command == "detect" and args.strategy is None:
            args.strategy = ["all"]
        return args.func(args)
    except UaevalError as exc:
        print(f"uaeval: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
