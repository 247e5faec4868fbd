import numpy as np
import pytest

from graphmixup.graph import Graph


def floyd_warshall(adjacency):
    """All-pairs hop counts by brute force; unreachable is -1."""
    n = adjacency.shape[0]
    d = np.full((n, n), np.inf)
    d[adjacency > 0] = 1
    np.fill_diagonal(d, 0)
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    out = np.where(np.isinf(d), -1, d)
    return out.astype(np.int64)


def random_graph(rng, n, p, n_features=3, n_classes=None):
    iu = np.triu_indices(n, 1)
    mask = rng.random(len(iu[0])) < p
    edges = np.stack([iu[0][mask], iu[1][mask]], axis=1)
    X = rng.normal(size=(n, n_features))
    labels = None if n_classes is None else rng.integers(0, n_classes, size=n)
    return Graph.from_edges(n, edges, X, labels)


def path_graph(n, n_features=2):
    edges = [(i, i + 1) for i in range(n - 1)]
    return Graph.from_edges(n, edges, np.eye(n, n_features))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store a one-line verdict for an acceptance criterion."""
    def _record(number, ok, detail):
        _ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
