import os
from pathlib import Path

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("default", max_examples=100, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

TESTS = Path(__file__).resolve().parent
FIXTURES = TESTS / "fixtures"
GOLDEN = TESTS / "golden"

_criteria: dict[int, dict] = {}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    marker = dict(report.user_properties).get("criterion")
    if marker is None:
        return
    num, title = marker
    entry = _criteria.setdefault(num, {"title": title, "ok": True, "detail": ""})
    if report.failed:
        entry["ok"] = False
    detail = dict(report.user_properties).get("detail")
    if detail and report.when == "call":
        entry["detail"] = detail


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        c = _criteria[num]
        status = "PASS" if c["ok"] else "FAIL"
        line = f"[{status}] criterion {num}: {c['title']}"
        if c["detail"]:
            line += f"  ({c['detail']})"
        terminalreporter.write_line(line)
