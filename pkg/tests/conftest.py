import numpy as np
import pytest

from peerskill import InteractionGraph

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.addinivalue_line("markers", "slow: long-running Monte Carlo check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.append((marker.args[0], marker.args[1], report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome, duration in sorted(_CRITERIA):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title} ({duration:.1f}s)")


@pytest.fixture
def star_graph():
    """Node 0 talks once with each of nodes 1, 2 and 3."""
    return InteractionGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)])


def random_weights(rng, n, max_weight=5, density=0.5):
    w = np.triu(rng.integers(1, max_weight + 1, (n, n)) * (rng.random((n, n)) < density), 1)
    return w + w.T


def random_connected_weights(rng, n, max_weight=5, density=0.3):
    """Random spanning tree plus extra random edges, integer weights."""
    w = random_weights(rng, n, max_weight, density)
    order = rng.permutation(n)
    for a in range(1, n):
        i, j = order[a], order[rng.integers(0, a)]
        w[i, j] = w[j, i] = max(w[i, j], int(rng.integers(1, max_weight + 1)))
    return w


def pairwise_tv(weights, r):
    """Edge-by-edge sum over i > j, written as plainly as possible."""
    total = 0.0
    n = len(r)
    for i in range(n):
        for j in range(i):
            total += weights[i][j] * (r[i] - r[j]) ** 2
    return total
