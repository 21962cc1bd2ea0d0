import numpy as np
import pytest

from qsl_lab.settings import set_hbar

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _reset_hbar():
    set_hbar(1.0)
    yield
    set_hbar(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
