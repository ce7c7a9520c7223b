import io

import numpy as np
import pytest

from influlocal.data import SampledInstance
from influlocal.feats import (DegenerateGraphError, INSTANCE_COLUMNS, VertexFeatureTable,
                              assemble_vertex_features, clustering_coefficient, coreness,
                              ego_features, eigenvector_centrality, hits, pagerank)
from influlocal.graph import Graph

from conftest import complete_graph, path_graph, random_graph


def brute_coreness(a):
    n = len(a)
    core = np.zeros(n, dtype=int)
    for k in range(1, n):
        alive = np.ones(n, dtype=bool)
        changed = True
        while changed:
            deg = (a[:, alive] > 0).sum(axis=1)
            drop = alive & (deg < k)
            changed = drop.any()
            alive &= ~drop
        core[alive] = k
    return core


def dense_pagerank(a, d=0.85):
    n = len(a)
    deg = a.sum(axis=1)
    p = np.zeros((n, n))
    nz = deg > 0
    p[nz] = a[nz] / deg[nz, None]
    p[~nz] = 1.0 / n
    m = np.eye(n) - d * p.T
    x = np.linalg.solve(m, np.full(n, (1 - d) / n))
    return x / x.sum()


def top_space_projection(m, start):
    vals, vecs = np.linalg.eigh(m)
    top = vecs[:, np.abs(vals - vals.max()) < 1e-9 * max(1.0, abs(vals.max()))]
    x = top @ (top.T @ start)
    return x / np.linalg.norm(x)


def dense_eigencentrality(a):
    n = len(a)
    labels = -np.ones(n, dtype=int)
    reach = (a + np.eye(n)) > 0
    for _ in range(n):
        reach = (reach.astype(int) @ reach.astype(int)) > 0
    out = np.zeros(n)
    for v in range(n):
        if labels[v] < 0:
            labels[reach[v]] = v
    for c in set(labels.tolist()):
        mem = np.flatnonzero(labels == c)
        if len(mem) < 2:
            continue
        vals, vecs = np.linalg.eigh(a[np.ix_(mem, mem)])
        x = np.abs(vecs[:, -1])
        out[mem] = vals[-1] * x
    return out / np.linalg.norm(out)


def graphs_with_edges(rng, count=100):
    out = []
    while len(out) < count:
        g = random_graph(rng)
        if g.edge_count:
            out.append(g)
    return out


def test_coreness_matches_peeling_oracle(rng):
    for g in graphs_with_edges(rng):
        assert np.array_equal(coreness(g), brute_coreness(g.adjacency()))


def test_coreness_examples():
    assert coreness(complete_graph(4)).tolist() == [3, 3, 3, 3]
    assert coreness(path_graph(4)).tolist() == [1, 1, 1, 1]
    g = Graph.from_edges(5, [(0, 1), (1, 2), (2, 0), (2, 3)])
    assert coreness(g).tolist() == [2, 2, 2, 1, 0]


def test_clustering_matches_triangle_count(rng):
    for g in graphs_with_edges(rng):
        a = g.adjacency()
        tri = np.diag(a @ a @ a)
        d = a.sum(axis=1)
        expect = np.divide(tri, d * (d - 1), out=np.zeros_like(tri), where=d >= 2)
        assert np.array_equal(clustering_coefficient(g), expect) or \
            np.allclose(clustering_coefficient(g), expect, atol=1e-15)


def test_pagerank_matches_linear_solve(rng):
    for g in graphs_with_edges(rng):
        np.testing.assert_allclose(pagerank(g, tol=1e-13, max_iter=5000),
                                   dense_pagerank(g.adjacency()), atol=1e-7)


def test_pagerank_default_tolerance_and_sum(rng):
    g = random_graph(rng, 8, 12)
    x, info = pagerank(g, return_info=True)
    assert info["converged"] and abs(x.sum() - 1) < 1e-12
    np.testing.assert_allclose(x, dense_pagerank(g.adjacency()), atol=1e-7)


def test_pagerank_nonconvergence_is_reported(caplog):
    _, info = pagerank(path_graph(6), max_iter=1, return_info=True)
    assert not info["converged"]
    assert "did not converge" in caplog.text


def test_hits_matches_eigensolver(rng):
    for g in graphs_with_edges(rng):
        a = g.adjacency()
        start = np.ones(len(a))
        hub, auth = hits(g, tol=1e-14, max_iter=20000)
        expect_hub = top_space_projection(a @ a.T, start)
        expect_auth = a.T @ expect_hub
        np.testing.assert_allclose(hub, expect_hub, atol=1e-7)
        np.testing.assert_allclose(auth, expect_auth / np.linalg.norm(expect_auth), atol=1e-7)


def test_eigenvector_centrality_matches_eigensolver(rng):
    for g in graphs_with_edges(rng):
        np.testing.assert_allclose(eigenvector_centrality(g, tol=1e-14, max_iter=20000),
                                   dense_eigencentrality(g.adjacency()), atol=1e-7)


def test_degenerate_graphs():
    empty = Graph.from_edges(3, np.zeros((0, 2), dtype=int))
    with pytest.raises(DegenerateGraphError):
        hits(empty)
    with pytest.raises(DegenerateGraphError):
        eigenvector_centrality(empty)
    np.testing.assert_allclose(pagerank(empty), np.full(3, 1 / 3))


def test_feature_table_round_trip(rng):
    g = random_graph(rng, 8, 12, p=0.5)
    table = VertexFeatureTable.compute(g)
    buf = io.StringIO()
    table.save(buf)
    buf.seek(0)
    back = VertexFeatureTable.load(buf)
    assert np.array_equal(back.values, table.values)
    assert np.array_equal(back.degree, table.degree)


def _instance(vertices, active, ego_local, n):
    verts = np.full(n, -1)
    verts[:len(vertices)] = vertices
    act = np.zeros(n, dtype=bool)
    act[:len(active)] = active
    pad = np.arange(n) >= len(vertices)
    return SampledInstance(verts, Graph.from_edges(n, np.zeros((0, 2), dtype=int)), ego_local,
                           act, pad, 1)


def test_assemble_vertex_features_pads_and_rarity():
    g = complete_graph(4)
    table = VertexFeatureTable.compute(g)
    inst = _instance([0, 1, 2], [False, True, True], 0, 5)
    rows = assemble_vertex_features(table, inst)
    assert rows.shape == (5, len(INSTANCE_COLUMNS))
    assert np.all(rows[3:] == 0)
    assert np.all(rows[:3, -1] == 1 / 3)


def test_ego_features_structural_diversity():
    # ego 0 with neighbors 1..4; active 1, 2 (linked) and 4 (isolated)
    g = Graph.from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2)])
    inst = _instance([0, 1, 2, 3, 4], [False, True, True, False, True], 0, 5)
    f = ego_features(inst, g)
    assert f.num_active == 3
    assert f.ratio_active == 0.75
    assert f.active_density == pytest.approx(1 / 3)
    assert f.active_components == 2
    assert f.rarity == 0.25
