"""Shared fixtures; collects acceptance-criterion verdicts for the summary."""

import pytest

_criterion_lines = []


@pytest.fixture
def record_criterion():
    """Record one acceptance criterion verdict; echoed after the run."""

    def record(number: int, description: str, passed: bool) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'} - {description}"
        _criterion_lines.append((number, line))
        print(line)

    return record


@pytest.fixture
def criterion_log():
    """The verdict lines recorded so far, as (number, line) pairs."""
    return _criterion_lines


def pytest_terminal_summary(terminalreporter):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_criterion_lines):
        terminalreporter.write_line(line)
