import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_correlation(rng, n, rank_extra=3):
    """Wishart-style random correlation matrix."""
    a = rng.normal(size=(n, n + rank_extra))
    c = a @ a.T
    d = np.sqrt(np.diag(c))
    out = c / np.outer(d, d)
    np.fill_diagonal(out, 1.0)
    return 0.5 * (out + out.T)


def near_one_factor(rng, n, spread=0.08, base=0.5):
    """One-factor matrix with a small symmetric perturbation of the off-diagonals."""
    c = rng.uniform(base - 0.1, base + 0.1, n)
    a = np.outer(c, c)
    e = rng.uniform(-spread, spread, (n, n))
    a = a + 0.5 * (e + e.T)
    np.fill_diagonal(a, 1.0)
    return a


def one_factor_matrix(c):
    a = np.outer(c, c)
    np.fill_diagonal(a, 1.0)
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
