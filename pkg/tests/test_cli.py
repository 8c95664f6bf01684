import json
import subprocess
import sys

import pytest

from uaeval.cli import USAGE_EXIT, main


def _run(*argv):
    return main([str(a) for a in argv])


def test_usage_errors(capsys):
    assert _run() == USAGE_EXIT
    assert _run("evaluate") == USAGE_EXIT
    assert _run("evaluate", "x.jsonl", "--method", "magic") == USAGE_EXIT
    assert "usage" in capsys.readouterr().err


def test_missing_file(capsys):
    assert _run("evaluate", "/no/such/file.jsonl") == 4
    assert "InvalidInput" in capsys.readouterr().err


@pytest.mark.parametrize(
    "content,code",
    [
        ("{broken\n", 2),
        ("", 3),
        ('{"segment_id": "a"}\n', 3),
    ],
)
def test_error_exit_codes(tmp_path, content, code):
    p = tmp_path / "d.jsonl"
    p.write_text(content)
    assert _run("evaluate", p) == code


def test_degenerate_golds(tmp_path):
    line = {"doc_id": "d", "system_id": "A", "mt_len_words": 2, "gold": 1.0, "samples": [[0.1, 0.3]]}
    rows = [json.dumps({**line, "segment_id": f"s{j}", "doc_id": f"d{j}"}) for j in range(6)]
    p = tmp_path / "d.jsonl"
    p.write_text("\n".join(rows) + "\n")
    assert _run("calibrate", p, "--k", "2") == 7


def test_module_entry_point(fixtures_dir):
    out = subprocess.run(
        [sys.executable, "-m", "uaeval", "folds", str(fixtures_dir / "handmade20.jsonl"), "--k", "2"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert json.loads(out.stdout)["k"] == 2


def test_seed_from_environment(fixtures_dir, monkeypatch, capsys):
    ds = fixtures_dir / "sim25.jsonl"
    assert _run("folds", ds, "--seed", "3") == 0
    explicit = capsys.readouterr().out
    monkeypatch.setenv("UAEVAL_SEED", "3")
    assert _run("folds", ds) == 0
    assert capsys.readouterr().out == explicit
    monkeypatch.setenv("UAEVAL_SEED", "nope")
    assert _run("folds", ds) == 4


def test_config_file_defaults(fixtures_dir, tmp_path, capsys):
    ds = fixtures_dir / "sim25.jsonl"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"folds": {"k": 4, "seed": 2}}))
    assert _run("--config", cfg, "folds", ds) == 0
    assert json.loads(capsys.readouterr().out)["k"] == 4
    # flags beat the file
    assert _run("--config", cfg, "folds", ds, "--k", "3") == 0
    assert json.loads(capsys.readouterr().out)["k"] == 3
    cfg.write_text(json.dumps({"nonsense": {}}))
    assert _run("--config", cfg, "folds", ds) == 4


def test_simulate_seed_override(fixtures_dir, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert _run("simulate", fixtures_dir / "simspec.json", a, "--seed", "99") == 0
    assert _run("simulate", fixtures_dir / "simspec.json", b) == 0
    assert a.read_text() != b.read_text()


def test_detect_on_homoscedastic_fixture(fixtures_dir, tmp_path):
    rep = tmp_path / "det.json"
    code = _run(
        "detect", fixtures_dir / "homoscedastic.jsonl", "--strategy", "risk_cdf", "--strategy", "mean_of_samples",
        "--report", rep,
    )
    assert code == 0
    doc = json.loads(rep.read_text())
    ranks = {r["strategy"]: r["ranking"] for r in doc["reports"]}
    assert ranks["risk_cdf"] == ranks["mean_of_samples"]


def test_evaluate_outputs(fixtures_dir, tmp_path, capsys):
    rep = tmp_path / "ev.json"
    assert _run("evaluate", fixtures_dir / "handmade20.jsonl", "--k", "2", "--report", rep) == 0
    table = capsys.readouterr().out
    assert (tmp_path / "ev.txt").read_text() == table
    doc = json.loads(rep.read_text())
    assert len(doc["folds"]) == 2
    assert "mean" in table


def test_multiref_single_reference(fixtures_dir, capsys):
    assert _run("multiref", fixtures_dir / "sim25.jsonl", "--k", "2") == 0
    lines = capsys.readouterr().out.splitlines()
    assert any(l.startswith("S-1 mean") for l in lines) and any(l.startswith("Mul mean") for l in lines)


def test_bad_refs(fixtures_dir):
    assert _run("evaluate", fixtures_dir / "sim25.jsonl", "--refs", "a,b") == USAGE_EXIT
    assert _run("evaluate", fixtures_dir / "sim25.jsonl", "--refs", "5") == 4


def test_plot(fixtures_dir, tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "curves.png"
    assert _run("detect", fixtures_dir / "sim25.jsonl", "--plot", out) == 0
    assert out.stat().st_size > 0
