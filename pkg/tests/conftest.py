import numpy as np
import pytest

from influlocal.graph import Graph


def random_graph(rng, n_min=2, n_max=12, p=None) -> Graph:
    n = int(rng.integers(n_min, n_max + 1))
    p = rng.uniform(0.1, 0.7) if p is None else p
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    edges = np.stack([iu[0][keep], iu[1][keep]], axis=1)
    return Graph.from_edges(n, edges)


def dense_adj(g: Graph) -> np.ndarray:
    return g.adjacency(dense=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n):
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
