import numpy as np
import pytest

from mabk_entropy.ghz import ghz_projector
from mabk_entropy.linalg import ket_to_density


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ghz3():
    return ghz_projector(3)


@pytest.fixture
def id8():
    return np.eye(8, dtype=complex) / 8


@pytest.fixture
def fixed_outcome_state():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    return np.kron(np.eye(2) / 2, ket_to_density(bell))


_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict line, printed again in the terminal summary."""
    store = request.config.stash.setdefault(_CRITERIA, {})

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        store[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_CRITERIA, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for number in sorted(store):
            terminalreporter.write_line(store[number])
