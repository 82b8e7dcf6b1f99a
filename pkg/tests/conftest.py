import math
import sys

import numpy as np
import pytest

from iterqpe.model import HubbardParams, build_hubbard, exact_propagator, pauli_sum_to_matrix, sector_eigenpairs

E_H = (1 + math.sqrt(17)) / 2


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)


@pytest.fixture(scope="session")
def hubbard():
    return build_hubbard(HubbardParams(1.0, 1.0))


@pytest.fixture(scope="session")
def hubbard_prop(hubbard):
    return exact_propagator(hubbard)


@pytest.fixture(scope="session")
def hubbard_top(hubbard):
    """Highest half-filling eigenpair ``(energy, state)`` of Hubbard(1, 1)."""
    energies, vectors = sector_eigenpairs(pauli_sum_to_matrix(hubbard), 2)
    return float(energies[-1]), vectors[:, -1]


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
