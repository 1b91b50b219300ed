import math

import numpy as np
import pytest


def dkw_eps(n: int, alpha: float = 1e-3) -> float:
    """Half-width of the DKW confidence band for an n-sample empirical CDF."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def ecdf_sup_distance(samples: np.ndarray, cdf, cdf_left=None) -> float:
    """sup |F_n - F|, checked at and just left of every distinct sample value.

    ``cdf_left`` gives F(x-) and is needed when the law has atoms.
    """
    x, counts = np.unique(samples, return_counts=True)
    n = samples.size
    right = np.cumsum(counts) / n
    left = right - counts / n
    F = np.asarray(cdf(x))
    F_left = F if cdf_left is None else np.asarray(cdf_left(x))
    return float(max(np.max(np.abs(right - F)), np.max(np.abs(left - F_left))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)
