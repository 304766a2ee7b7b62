import numpy as np
import pytest

from netlowrank.graph import Graph


def complete(n):
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def star(leaves):
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def path(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def diamond():
    # K4 minus the edge (2, 3)
    return Graph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])


def random_graph(rng, n, p):
    iu = np.triu_indices(n, 1)
    mask = rng.random(len(iu[0])) < p
    return Graph.from_edges(n, np.stack([iu[0][mask], iu[1][mask]], axis=1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
