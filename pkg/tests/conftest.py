"""Shared pytest plumbing for the acceptance suite.

Acceptance tests record one verdict line per criterion through the
`acceptance` fixture; the lines are echoed both immediately (visible with -s
or on failure) and in a dedicated section of the terminal summary, so a plain
`pytest` run always ends with the full PASS/FAIL/WARN list.
"""

import pytest

_ACCEPTANCE_LINES: list[tuple[int, str]] = []


def _record(number: int, name: str, status: str, detail: str = "") -> None:
    line = f"ACCEPTANCE {number:>2} {name}: {status}"
    if detail:
        line += f" ({detail})"
    _ACCEPTANCE_LINES.append((number, line))
    print(line)


@pytest.fixture
def acceptance():
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
