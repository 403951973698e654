import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pacdnn.code import PacCode


@pytest.fixture(scope="session")
def code84():
    return PacCode.rm_polar(8, 4)


@pytest.fixture(scope="session")
def code168():
    return PacCode.rm_polar(16, 8)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
