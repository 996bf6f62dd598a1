import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cutplane_opf import fixture_path, load_case  # noqa: E402


@pytest.fixture(scope="session")
def case2():
    return load_case(fixture_path("case2.m"))


@pytest.fixture(scope="session")
def case9():
    return load_case(fixture_path("case9.m"))


@pytest.fixture(scope="session")
def case_zero():
    return load_case(fixture_path("case2_zero.m"))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
