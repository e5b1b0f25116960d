import numpy as np
import pytest

from calibkit.core import LabeledDataset

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_dataset(gen, n, m, concentration=0.5):
    P = gen.dirichlet(np.full(m, concentration), size=n)
    y = gen.integers(1, m + 1, size=n)
    return LabeledDataset(P, y, m)


# --- naive oracles, written independently of calibkit's kernel code -------


def naive_scalar(family, nu, dist, s, t):
    if dist == "tv":
        d = 0.5 * sum(abs(a - b) for a, b in zip(s, t))
    else:
        d = sum((a - b) ** 2 for a, b in zip(s, t)) ** 0.5
    if family == "exponential":
        return np.exp(-d / nu)
    return np.exp(-((d / nu) ** 2))


def naive_kernel_matrix(terms, s, t):
    """terms: list of (family, nu, dist, weight, matrix-or-None)."""
    m = len(s)
    K = np.zeros((m, m))
    for family, nu, dist, weight, A in terms:
        A = np.eye(m) if A is None else A
        K += weight * naive_scalar(family, nu, dist, s, t) * A
    return K


def naive_h(terms, P, y):
    n, m = P.shape
    E = np.eye(m)[np.asarray(y) - 1] - P
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            H[i, j] = E[i] @ naive_kernel_matrix(terms, P[i], P[j]) @ E[j]
    return H


def naive_estimators(terms, P, y):
    H = naive_h(terms, P, y)
    n = H.shape[0]
    biased = H.sum() / n**2
    unbiased = sum(H[i, j] for i in range(n) for j in range(i + 1, n)) / (n * (n - 1) / 2)
    k = n // 2
    linear = sum(H[2 * i, 2 * i + 1] for i in range(k)) / k
    return biased, unbiased, linear, np.trace(H)


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)
