import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qshift.exact import ObservableSpec, random_state  # noqa: E402
from qshift.hamiltonian import build_tfim, sum_z  # noqa: E402

_ACCEPTANCE_LINES: list[str] = []


def record(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture
def report():
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tfim6():
    return build_tfim(6, 1.0, 0.1)


@pytest.fixture(scope="session")
def sumz6():
    return ObservableSpec("sum_z", sum_z(6))


@pytest.fixture(scope="session")
def psi6():
    return random_state(6, 0)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))
