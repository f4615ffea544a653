import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number:2d}: {status}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
