import numpy as np
import pytest

from daedex.generators import equality_suite
from daedex.pencil import Pencil

N2 = np.array([[0.0, 1.0], [0.0, 0.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def nil2():
    """``E = [[0, 1], [0, 0]]``, ``A = I``: a single degree-2 block."""
    return Pencil(N2, np.eye(2), "nil2")


@pytest.fixture
def nil3():
    return Pencil(np.eye(3, k=1), np.eye(3), "nil3")


@pytest.fixture(scope="session")
def suite():
    return equality_suite(42)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
