"""Undirected weighted graphs in compressed adjacency (CSR) form."""

from __future__ import annotations

from collections import deque
from typing import Hashable, Iterable, TextIO

import numpy as np


class GraphError(ValueError):
    """Malformed graph input or an invalid vertex reference."""


class Graph:
    """Immutable undirected graph.

    ``offsets``/``targets`` hold the sorted neighbor lists, ``weights`` the
    per-arc weights (each undirected edge is stored as two arcs).  ``ids`` maps
    internal index -> external id.
    """

    __slots__ = ("offsets", "targets", "weights", "ids", "_index")

    def __init__(self, offsets, targets, weights, ids=None):
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.targets = np.asarray(targets, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.float64)
        n = len(self.offsets) - 1
        self.ids = list(range(n)) if ids is None else list(ids)
        if len(self.ids) != n:
            raise GraphError("id map length does not match vertex count")
        self._index = None
        for a in (self.offsets, self.targets, self.weights):
            a.setflags(write=False)

    @classmethod
    def from_edges(cls, num_vertices: int, edges, weights=None, ids=None) -> "Graph":
        """Build from an iterable of (u, v) pairs over internal indices.

        Duplicate edges are merged with their weights summed.
        """
        edges = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                           dtype=np.int64).reshape(-1, 2)
        if weights is None:
            w = np.ones(len(edges))
        else:
            w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if len(edges) and (edges.min() < 0 or edges.max() >= num_vertices):
            raise GraphError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise GraphError("self-loops are not allowed")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise GraphError("edge weights must be positive and finite")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        key = lo * num_vertices + hi
        uniq, inv = np.unique(key, return_inverse=True)
        wsum = np.zeros(len(uniq))
        np.add.at(wsum, inv, w)
        lo, hi = uniq // max(num_vertices, 1), uniq % max(num_vertices, 1)
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        ww = np.concatenate([wsum, wsum])
        order = np.lexsort((dst, src))
        src, dst, ww = src[order], dst[order], ww[order]
        offsets = np.zeros(num_vertices + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=num_vertices), out=offsets[1:])
        return cls(offsets, dst, ww, ids)

    @property
    def vertex_count(self) -> int:
        return len(self.offsets) - 1

    @property
    def edge_count(self) -> int:
        return len(self.targets) // 2

    def degree(self, v=None):
        deg = np.diff(self.offsets)
        return deg if v is None else int(deg[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.targets[self.offsets[v]:self.offsets[v + 1]]

    def neighbor_weights(self, v: int) -> np.ndarray:
        return self.weights[self.offsets[v]:self.offsets[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def edge_list(self) -> tuple[np.ndarray, np.ndarray]:
        """Canonical (u < v) edge array sorted lexicographically, and weights."""
        src = np.repeat(np.arange(self.vertex_count), np.diff(self.offsets))
        keep = src < self.targets
        return np.stack([src[keep], self.targets[keep]], axis=1), self.weights[keep]

    def adjacency(self, dense: bool = True):
        from scipy import sparse

        n = self.vertex_count
        a = sparse.csr_matrix((self.weights, self.targets, self.offsets), shape=(n, n))
        return a.toarray() if dense else a

    def index_of(self, external_id: Hashable) -> int:
        if self._index is None:
            self._index = {x: i for i, x in enumerate(self.ids)}
        try:
            return self._index[external_id]
        except KeyError:
            raise GraphError(f"unknown vertex id {external_id!r}") from None

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.targets, other.targets)
                and np.array_equal(self.weights, other.weights)
                and [str(x) for x in self.ids] == [str(x) for x in other.ids])

    def __repr__(self):
        return f"Graph(vertices={self.vertex_count}, edges={self.edge_count})"


def _parse_id(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def load_edge_list(source: TextIO | str, weighted: bool = False) -> Graph:
    """Read a whitespace-separated edge list.

    ``source`` is a text stream or a path.  Lines starting with ``#`` are
    comments.  External ids are mapped to dense indices in order of first
    appearance.
    """
    if isinstance(source, str):
        with open(source) as fh:
            return load_edge_list(fh, weighted)
    index: dict = {}
    us, vs, ws = [], [], []
    for lineno, line in enumerate(source, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphError(f"line {lineno}: expected 'u v' or 'u v w', got {line!r}")
        w = 1.0
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise GraphError(f"line {lineno}: bad weight {parts[2]!r}") from None
            if not weighted:
                w = 1.0
            elif w < 0 or not np.isfinite(w):
                raise GraphError(f"line {lineno}: negative or non-finite weight {w}")
            elif w == 0:
                raise GraphError(f"line {lineno}: zero weight")
        a, b = _parse_id(parts[0]), _parse_id(parts[1])
        if a == b:
            raise GraphError(f"line {lineno}: self-loop on {a!r}")
        for x in (a, b):
            if x not in index:
                index[x] = len(index)
        us.append(index[a])
        vs.append(index[b])
        ws.append(w)
    ids = list(index)
    return Graph.from_edges(len(ids), np.stack([us, vs], axis=1) if us else np.zeros((0, 2)),
                            ws, ids)


def save_graph(g: Graph, dest: TextIO | str) -> None:
    """Write ``num_vertices num_edges``, an ``#ids`` line, then canonical edges.

    The ``#ids`` comment fixes the internal vertex order (and keeps isolated
    vertices) for :func:`read_graph`; plain edge-list readers skip it.  Weights
    are written only if some edge weight differs from 1.
    """
    if isinstance(dest, str):
        with open(dest, "w") as fh:
            return save_graph(g, fh)
    edges, w = g.edge_list()
    weighted = bool(np.any(w != 1.0))
    dest.write(f"{g.vertex_count} {g.edge_count}\n")
    dest.write("#ids " + " ".join(str(x) for x in g.ids) + "\n")
    for (u, v), x in zip(edges.tolist(), w.tolist()):
        a, b = g.ids[u], g.ids[v]
        dest.write(f"{a} {b} {x!r}\n" if weighted else f"{a} {b}\n")


def read_graph(source: TextIO | str) -> Graph:
    """Inverse of :func:`save_graph`."""
    if isinstance(source, str):
        with open(source) as fh:
            return read_graph(fh)
    header = source.readline().split()
    if len(header) != 2:
        raise GraphError("missing 'num_vertices num_edges' header")
    nv, ne = int(header[0]), int(header[1])
    id_line = source.readline()
    if not id_line.startswith("#ids"):
        raise GraphError("missing '#ids' line")
    ids = [_parse_id(t) for t in id_line.split()[1:]]
    index = {x: i for i, x in enumerate(ids)}
    edges, weights = [], []
    for lineno, line in enumerate(source, 3):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) not in (2, 3):
            raise GraphError(f"line {lineno}: expected 'u v' or 'u v w', got {line.strip()!r}")
        try:
            edges.append((index[_parse_id(parts[0])], index[_parse_id(parts[1])]))
        except KeyError as e:
            raise GraphError(f"line {lineno}: id {e.args[0]!r} not in #ids") from None
        weights.append(float(parts[2]) if len(parts) == 3 else 1.0)
    if len(ids) != nv or len(edges) != ne:
        raise GraphError(f"header says {nv} vertices/{ne} edges, body has "
                         f"{len(ids)}/{len(edges)}")
    return Graph.from_edges(nv, np.array(edges, dtype=np.int64).reshape(-1, 2), weights, ids)


def induced_subgraph(g: Graph, vertices: Iterable[int]) -> tuple[Graph, dict[int, int]]:
    """Subgraph on ``vertices`` (kept in sorted order) and the old->new map."""
    s = np.unique(np.asarray(list(vertices), dtype=np.int64))
    if len(s) == 0:
        raise GraphError("empty vertex set")
    if s[0] < 0 or s[-1] >= g.vertex_count:
        raise GraphError("vertex index out of range")
    remap = np.full(g.vertex_count, -1, dtype=np.int64)
    remap[s] = np.arange(len(s))
    src, dst, w = [], [], []
    for new_u, u in enumerate(s.tolist()):
        nb = g.neighbors(u)
        mapped = remap[nb]
        keep = mapped > new_u
        dst.append(mapped[keep])
        w.append(g.neighbor_weights(u)[keep])
        src.append(np.full(int(keep.sum()), new_u))
    edges = np.stack([np.concatenate(src), np.concatenate(dst)], axis=1)
    sub = Graph.from_edges(len(s), edges, np.concatenate(w), [g.ids[i] for i in s.tolist()])
    return sub, {int(old): i for i, old in enumerate(s.tolist())}


def connected_components(g: Graph) -> np.ndarray:
    """Component label per vertex, numbered 0..C-1 by smallest member."""
    labels = np.full(g.vertex_count, -1, dtype=np.int64)
    c = 0
    for start in range(g.vertex_count):
        if labels[start] >= 0:
            continue
        labels[start] = c
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in g.neighbors(u).tolist():
                if labels[v] < 0:
                    labels[v] = c
                    queue.append(v)
        c += 1
    return labels


def bfs_distances(g: Graph, source: int, limit: int | None = None) -> dict[int, int]:
    """Hop distances from ``source``, optionally truncated at ``limit`` hops."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if limit is not None and dist[u] >= limit:
            continue
        for v in g.neighbors(u).tolist():
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist
