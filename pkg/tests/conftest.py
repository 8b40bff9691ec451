import numpy as np
import pytest

from polarbp import construct_frozen_set


@pytest.fixture(scope="session")
def spec84():
    return construct_frozen_set(8, 4, 0.5)


@pytest.fixture(scope="session")
def spec1024():
    return construct_frozen_set(1024, 512, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def kron_matrix(n):
    """F^{(x)m} built by explicit block recursion [[G, 0], [G, G]] (test oracle)."""
    g = np.ones((1, 1), dtype=np.int64)
    while g.shape[0] < n:
        z = np.zeros_like(g)
        g = np.block([[g, z], [g, g]])
    return g


def gf2_encode(u):
    u = np.asarray(u, dtype=np.int64)
    return (u @ kron_matrix(u.size)) % 2


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
