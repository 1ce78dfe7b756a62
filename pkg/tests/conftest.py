import numpy as np
import pytest

from romtree.generators import HEAT_GAMMAS, HEAT_TRAIN, SOLITON_ALPHAS, SOLITON_TRAIN, format_id, heat_sweep, soliton_sweep

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_basis(rng, n, r):
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return q


def random_orthogonal(rng, r):
    q, R = np.linalg.qr(rng.standard_normal((r, r)))
    return q * np.sign(np.diag(R))


@pytest.fixture(scope="session")
def heat_set():
    return heat_sweep(HEAT_GAMMAS, bc="neumann")


@pytest.fixture(scope="session")
def heat_train_ids():
    return [format_id("g", g) for g in HEAT_TRAIN]


@pytest.fixture(scope="session")
def soliton_set():
    return soliton_sweep(SOLITON_ALPHAS)


@pytest.fixture(scope="session")
def soliton_train_ids():
    return [format_id("a", a) for a in SOLITON_TRAIN]
