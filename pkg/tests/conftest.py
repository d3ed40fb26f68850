"""Collects the acceptance verdicts and prints them, one line per criterion, after the run."""

import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def verdict():
    """``verdict(n, ok, detail)`` records the line for criterion ``n`` and returns ``ok``."""

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
