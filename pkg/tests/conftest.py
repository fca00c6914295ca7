import numpy as np
import pytest

from buslane_pool.sampling import random_scenarios
from buslane_pool.scenario_file import load_fixture

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def paper_file():
    return load_fixture("paper_vi")


@pytest.fixture(scope="session")
def paper(paper_file):
    return paper_file.scenario


@pytest.fixture(scope="session")
def scenarios():
    return random_scenarios(100, seed=20240611)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
