import numpy as np
import pytest

from symcalabi.exterior import SymplecticFrame


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def frame():
    return SymplecticFrame.standard()


@pytest.fixture(scope="session")
def exact_frame():
    return SymplecticFrame.standard(exact=True)


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        for line in ACCEPTANCE_LINES[key]:
            terminalreporter.write_line(line)
