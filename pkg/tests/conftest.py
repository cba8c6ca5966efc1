import numpy as np
import pytest

from mpgate.priors import Hyperparameters, PriorTable, example_table


@pytest.fixture
def table():
    return example_table()


@pytest.fixture
def hyper():
    return Hyperparameters()


@pytest.fixture
def zero_table():
    return PriorTable(("A", "B"), ("x", "y"), np.zeros((2, 2), dtype=np.int8))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
