import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cashpolicy import example_path, load_problem  # noqa: E402
from cashpolicy.model import CashSystem, CostStructure, ProblemInstance  # noqa: E402

# incidence of the three-account example: rows are transactions 1..6
S4_INCIDENCE = np.array([[1, -1, 0, 0, 1, -1],
                         [-1, 1, 1, -1, 0, 0],
                         [0, 0, -1, 1, -1, 1]]).T
S4_FORECASTS = np.array([[1, -3, 0], [1, -9, 0], [6, 6, 0], [-1, -4, 0], [-1, 6, 0]], dtype=float)


@pytest.fixture
def s4_system():
    return CashSystem([1, 2, 3], [1, 2, 3, 4, 5, 6], S4_INCIDENCE)


@pytest.fixture
def s4_costs():
    return CostStructure([50, 50, 100, 50, 100, 50], [0, 0, 100, 10, 100, 10], [100, 100, 0])


@pytest.fixture
def s4(s4_system, s4_costs):
    return ProblemInstance(s4_system, s4_costs, [2, 2, 0], [5, 8, 12], S4_FORECASTS)


@pytest.fixture
def s4_file():
    return Path(str(example_path("example_s4")))


@pytest.fixture
def s4_loaded(s4_file):
    return load_problem(s4_file)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
