import numpy as np
import pytest

from resilnet.network import generate_random_network

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


@pytest.fixture(scope="session")
def net345():
    return generate_random_network(3, 4, 5, seed=42)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
