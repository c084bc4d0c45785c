"""Shared pytest wiring.

Tests named test_criterion_NN_* feed a summary block that prints one
PASS/FAIL line per numbered acceptance check at the end of the run.
"""

import pathlib
import re

import pytest

_CRITERION_RE = re.compile(r"test_criterion_(\d+)")
_outcomes: dict[int, str] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION_RE.search(report.nodeid)
    if match is None:
        return
    num = int(match.group(1))
    if report.failed:
        _outcomes[num] = "FAIL"
    elif report.when == "call" and report.passed and _outcomes.get(num) != "FAIL":
        _outcomes[num] = "PASS"


@pytest.fixture
def fixture_dir():
    return pathlib.Path(__file__).parent / "data"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        terminalreporter.write_line(f"ACCEPTANCE CRITERION {num}: {_outcomes[num]}")
