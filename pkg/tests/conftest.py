import numpy as np
import pytest

from helpers import ACCEPTANCE_LINES, DriftEnv


@pytest.fixture
def drift_env():
    return DriftEnv()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
