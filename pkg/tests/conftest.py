import pytest

from fkmlab.fkm import FkmGeometry

CONFIGS = [(1, 3), (2, 2), (3, 2)]

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, text: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


@pytest.fixture(scope="session")
def geoms():
    return {mk: FkmGeometry.from_mk(*mk) for mk in CONFIGS}


@pytest.fixture(scope="session")
def g13(geoms):
    return geoms[(1, 3)]


@pytest.fixture(scope="session")
def g22(geoms):
    return geoms[(2, 2)]


@pytest.fixture(scope="session")
def g32(geoms):
    return geoms[(3, 2)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
