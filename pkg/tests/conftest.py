import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CRITERIA_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)
