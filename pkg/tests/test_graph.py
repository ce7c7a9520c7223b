import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from influlocal.graph import (Graph, GraphError, bfs_distances, connected_components,
                              induced_subgraph, load_edge_list, read_graph, save_graph)

from conftest import random_graph


@st.composite
def graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=30))
    edges = [(u, v) for u, v in pairs if u != v]
    return Graph.from_edges(n, np.array(edges, dtype=np.int64).reshape(-1, 2))


def test_parse_comments_and_ids():
    text = "# a comment\nalice bob\nbob carol\n\ncarol alice\n"
    g = load_edge_list(io.StringIO(text))
    assert g.vertex_count == 3 and g.edge_count == 3
    assert g.ids == ["alice", "bob", "carol"]
    assert g.index_of("carol") == 2
    assert sorted(g.neighbors(0).tolist()) == [1, 2]


def test_duplicate_edges_merge_and_unweighted_ignores_weight():
    g = load_edge_list(io.StringIO("1 2 5\n2 1 7\n"))
    assert g.edge_count == 1
    assert g.neighbor_weights(0).tolist() == [2.0]  # two unit edges merged
    gw = load_edge_list(io.StringIO("1 2 5\n2 1 7\n"), weighted=True)
    assert gw.neighbor_weights(0).tolist() == [12.0]


@pytest.mark.parametrize("text, msg", [
    ("1 2\n3\n", "line 2"),
    ("1 2 -1\n", "line 1"),
    ("1 1\n", "self-loop"),
    ("1 2 x\n", "line 1"),
])
def test_parse_errors_name_the_line(text, msg):
    with pytest.raises(GraphError, match=msg):
        load_edge_list(io.StringIO(text), weighted=True)


def test_from_edges_rejects_bad_input():
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 2)])
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 1)], weights=[0.0])


@given(graphs())
@settings(max_examples=60, deadline=None)
def test_save_read_round_trip(g):
    buf = io.StringIO()
    save_graph(g, buf)
    buf.seek(0)
    assert read_graph(buf) == g


def test_round_trip_keeps_isolated_vertices_and_weights():
    g = Graph.from_edges(5, [(0, 3), (3, 4)], weights=[0.5, 2.0], ids=["a", "b", "c", "d", "e"])
    buf = io.StringIO()
    save_graph(g, buf)
    buf.seek(0)
    h = read_graph(buf)
    assert h == g and h.degree(1) == 0


def test_read_graph_checks_header():
    with pytest.raises(GraphError, match="header"):
        read_graph(io.StringIO("3 5\n#ids 0 1 2\n0 1\n"))


@given(graphs())
@settings(max_examples=60, deadline=None)
def test_csr_invariants(g):
    assert g.targets.size == 2 * g.edge_count
    a = g.adjacency()
    assert np.array_equal(a, a.T)
    assert np.all(np.diag(a) == 0)
    for v in range(g.vertex_count):
        nb = g.neighbors(v)
        assert np.all(np.diff(nb) > 0)


def test_induced_subgraph_matches_brute_force(rng):
    for _ in range(50):
        g = random_graph(rng)
        k = int(rng.integers(1, g.vertex_count + 1))
        keep = sorted(rng.choice(g.vertex_count, size=k, replace=False).tolist())
        sub, remap = induced_subgraph(g, keep)
        expect = g.adjacency()[np.ix_(keep, keep)]
        assert np.array_equal(sub.adjacency(), expect)
        assert remap == {v: i for i, v in enumerate(keep)}


def _closure_components(a):
    # reachability by repeated squaring of (A + I), an oracle independent of BFS
    n = len(a)
    r = (a + np.eye(n)) > 0
    for _ in range(int(np.ceil(np.log2(max(n, 2)))) + 1):
        r = (r.astype(int) @ r.astype(int)) > 0
    return r


def test_components_match_transitive_closure(rng):
    for _ in range(100):
        g = random_graph(rng, p=rng.uniform(0.05, 0.4))
        labels = connected_components(g)
        reach = _closure_components(g.adjacency())
        assert np.array_equal(labels[:, None] == labels[None, :], reach)
        assert labels.min() == 0 and labels.max() == len(set(labels.tolist())) - 1


def test_bfs_distances_with_limit():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    assert bfs_distances(g, 0) == {0: 0, 1: 1, 2: 2, 3: 3, 4: 4}
    assert bfs_distances(g, 0, limit=2) == {0: 0, 1: 1, 2: 2}
