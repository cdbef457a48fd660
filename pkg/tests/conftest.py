import numpy as np
import pytest

ACCEPTANCE_LINES = []


def random_spd(rng, n, rank=None, scale=1.0):
    """Random PSD matrix of the given rank (full rank with a little slack by default)."""
    k = rank if rank is not None else n + 2
    X = rng.standard_normal((n, k))
    return scale * X @ X.T / k


def controlled_symmetric(rng, n, rank, low=0.5, high=2.0, signed=True):
    """Symmetric matrix with ``rank`` eigenvalues of modulus in [low, high], rest zero."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.zeros(n)
    lam[:rank] = rng.uniform(low, high, rank)
    if signed:
        lam[:rank] *= rng.choice([-1.0, 1.0], rank)
    return (Q * lam) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record_acceptance():
    def record(criterion, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        print(ACCEPTANCE_LINES[-1])

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
