"""Structural vertex features and hand-crafted ego-network features."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .graph import Graph, connected_components, induced_subgraph

log = logging.getLogger(__name__)

VERTEX_COLUMNS = ("coreness", "pagerank", "hub", "authority", "eigencentrality", "clustering")
INSTANCE_COLUMNS = VERTEX_COLUMNS + ("rarity",)


class DegenerateGraphError(ValueError):
    pass


def coreness(g: Graph) -> np.ndarray:
    """k-core number of every vertex (bucket-sort peeling, O(m))."""
    n = g.vertex_count
    deg = g.degree().astype(np.int64).copy()
    if n == 0:
        return deg
    md = int(deg.max())
    # bin[d] = start position of degree-d block in vert
    bins = np.zeros(md + 1, dtype=np.int64)
    np.add.at(bins, deg, 1)
    start = np.concatenate([[0], np.cumsum(bins)[:-1]])
    vert = np.argsort(deg, kind="stable")
    pos = np.empty(n, dtype=np.int64)
    pos[vert] = np.arange(n)
    bin_start = start.copy()
    deg_l = deg.tolist()
    vert_l, pos_l, bin_l = vert.tolist(), pos.tolist(), bin_start.tolist()
    offsets, targets = g.offsets.tolist(), g.targets.tolist()
    for i in range(n):
        v = vert_l[i]
        dv = deg_l[v]
        for u in targets[offsets[v]:offsets[v + 1]]:
            du = deg_l[u]
            if du > dv:
                pu = pos_l[u]
                pw = bin_l[du]
                w = vert_l[pw]
                if u != w:
                    pos_l[u], pos_l[w] = pw, pu
                    vert_l[pu], vert_l[pw] = w, u
                bin_l[du] += 1
                deg_l[u] = du - 1
    return np.array(deg_l, dtype=np.int64)


def _transition(g: Graph):
    from scipy import sparse

    n = g.vertex_count
    a = g.adjacency(dense=False)
    strength = np.asarray(a.sum(axis=1)).ravel()
    inv = np.divide(1.0, strength, out=np.zeros(n), where=strength > 0)
    # column-stochastic transpose: P^T x
    return (sparse.diags(inv) @ a).T.tocsr(), strength == 0


def pagerank(g: Graph, damping: float = 0.85, tol: float = 1e-8, max_iter: int = 200,
             return_info: bool = False):
    """PageRank of the undirected graph; dangling mass is spread uniformly.

    Stops when the L1 change drops below ``tol``; non-convergence is logged
    (and reported through ``return_info``) rather than raised.
    """
    n = g.vertex_count
    if n == 0:
        raise DegenerateGraphError("empty graph")
    pt, dangling = _transition(g)
    x = np.full(n, 1.0 / n)
    converged = False
    for it in range(1, max_iter + 1):
        new = damping * (pt @ x + x[dangling].sum() / n) + (1.0 - damping) / n
        new /= new.sum()
        err = np.abs(new - x).sum()
        x = new
        if err < tol:
            converged = True
            break
    if not converged:
        log.warning("pagerank did not converge in %d iterations (residual %.3g)", max_iter, err)
    return (x, {"iterations": it, "converged": converged}) if return_info else x


def hits(g: Graph, tol: float = 1e-8, max_iter: int = 200):
    """Hub and authority scores (L2 normalized), starting from the all-ones vector."""
    if g.edge_count == 0:
        raise DegenerateGraphError("HITS is undefined on a graph without edges")
    a = g.adjacency(dense=False)
    at = a.T.tocsr()
    h = np.ones(g.vertex_count) / np.sqrt(g.vertex_count)
    for _ in range(max_iter):
        auth = at @ h
        auth /= np.linalg.norm(auth)
        new_h = a @ auth
        new_h /= np.linalg.norm(new_h)
        err = np.abs(new_h - h).sum()
        h = new_h
        if err < tol:
            break
    else:
        log.warning("hits did not converge in %d iterations", max_iter)
    auth = at @ h
    return h, auth / np.linalg.norm(auth)


def eigenvector_centrality(g: Graph, tol: float = 1e-8, max_iter: int = 1000) -> np.ndarray:
    """Principal eigenvector of the adjacency matrix, computed per component.

    Each component with an edge gets its unit Perron vector scaled by the
    component's spectral radius; the whole vector is then L2 normalized, so
    on a connected graph this is the usual eigenvector centrality.  Power
    iteration runs on ``A + gamma*I`` (gamma = 0.1 * max degree) so bipartite
    components do not oscillate.
    """
    if g.edge_count == 0:
        raise DegenerateGraphError("eigenvector centrality needs at least one edge")
    n = g.vertex_count
    a = g.adjacency(dense=False)
    gamma = 0.1 * float(g.degree().max())
    labels = connected_components(g)
    out = np.zeros(n)
    for c in range(labels.max() + 1):
        members = np.flatnonzero(labels == c)
        if len(members) < 2:
            continue
        sub = a[members][:, members]
        x = np.ones(len(members)) / np.sqrt(len(members))
        for _ in range(max_iter):
            new = sub @ x + gamma * x
            new /= np.linalg.norm(new)
            err = np.abs(new - x).sum()
            x = new
            if err < tol:
                break
        else:
            log.warning("eigenvector centrality: component %d did not converge", c)
        radius = float(x @ (sub @ x))
        out[members] = radius * x
    return out / np.linalg.norm(out)


def clustering_coefficient(g: Graph) -> np.ndarray:
    n = g.vertex_count
    out = np.zeros(n)
    nbrs = [set(g.neighbors(v).tolist()) for v in range(n)]
    for v in range(n):
        k = len(nbrs[v])
        if k < 2:
            continue
        links = sum(len(nbrs[u] & nbrs[v]) for u in nbrs[v]) // 2
        out[v] = links / (k * (k - 1) / 2)
    return out


@dataclass
class VertexFeatureTable:
    values: np.ndarray  # vertex_count x 6, columns VERTEX_COLUMNS
    degree: np.ndarray
    columns: tuple = VERTEX_COLUMNS

    @classmethod
    def compute(cls, g: Graph) -> "VertexFeatureTable":
        hub, auth = hits(g)
        cols = [coreness(g).astype(np.float64), pagerank(g), hub, auth,
                eigenvector_centrality(g), clustering_coefficient(g)]
        return cls(np.stack(cols, axis=1), g.degree().copy())

    def save(self, dest: TextIO | str, ids=None) -> None:
        if isinstance(dest, str):
            with open(dest, "w") as fh:
                return self.save(fh, ids)
        ids = range(len(self.values)) if ids is None else ids
        dest.write("vertex_id degree " + " ".join(self.columns) + "\n")
        for vid, d, row in zip(ids, self.degree.tolist(), self.values.tolist()):
            dest.write(f"{vid} {d} " + " ".join(repr(x) for x in row) + "\n")

    @classmethod
    def load(cls, source: TextIO | str) -> "VertexFeatureTable":
        if isinstance(source, str):
            with open(source) as fh:
                return cls.load(fh)
        header = source.readline().split()
        if tuple(header[2:]) != VERTEX_COLUMNS:
            raise ValueError(f"unexpected feature columns {header[2:]}")
        deg, rows = [], []
        for line in source:
            parts = line.split()
            if parts:
                deg.append(int(parts[1]))
                rows.append([float(x) for x in parts[2:]])
        return cls(np.array(rows).reshape(-1, len(VERTEX_COLUMNS)), np.array(deg, dtype=np.int64))


def assemble_vertex_features(table: VertexFeatureTable, instance) -> np.ndarray:
    """n x 7 rows for the instance's vertices; the last column is the ego's rarity.

    Padded vertices get all-zero rows.
    """
    verts = np.asarray(instance.vertices)
    real = ~np.asarray(instance.pad_mask)
    if np.any(verts[real] < 0) or np.any(verts[real] >= len(table.values)):
        raise ValueError("instance vertex not present in feature table")
    out = np.zeros((len(verts), len(INSTANCE_COLUMNS)))
    out[real, :-1] = table.values[verts[real]]
    ego = int(verts[instance.ego_local])
    out[real, -1] = 1.0 / max(int(table.degree[ego]), 1)
    return out


@dataclass
class EgoFeatureVector:
    num_active: int
    ratio_active: float
    active_density: float
    active_components: int
    rarity: float

    def as_array(self) -> np.ndarray:
        """The four ego-network columns used by the linear baselines."""
        return np.array([self.num_active, self.ratio_active, self.active_density,
                         self.active_components], dtype=np.float64)


def ego_features(instance, g: Graph) -> EgoFeatureVector:
    ego = int(instance.vertices[instance.ego_local])
    nbrs = g.neighbors(ego)
    flags = np.asarray(instance.active) & ~np.asarray(instance.pad_mask)
    sampled_active = np.asarray(instance.vertices)[flags]
    active = np.intersect1d(sampled_active, nbrs)
    m = len(active)
    density, comps = 0.0, 0
    if m:
        sub, _ = induced_subgraph(g, active)
        comps = int(connected_components(sub).max() + 1)
        if m >= 2:
            density = sub.edge_count / (m * (m - 1) / 2)
    deg = max(len(nbrs), 1)
    return EgoFeatureVector(m, m / deg, density, comps, 1.0 / deg)
