from pathlib import Path

import pytest

import acceptance_log

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(acceptance_log.LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
