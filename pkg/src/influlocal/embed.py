"""DeepWalk-style embeddings: uniform random-walk corpus + skip-gram with negative sampling."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TextIO

import numba
import numpy as np

from .graph import Graph

log = logging.getLogger(__name__)


def generate_walks(g: Graph, walks_per_vertex: int = 10, walk_length: int = 40,
                   seed: int = 0) -> np.ndarray:
    """Uniform random walks, ``walks_per_vertex`` from every non-isolated vertex.

    All walkers advance together, one vectorized step at a time.  Returns an
    int array (num_walks, walk_length); round r holds one walk per start vertex.
    """
    if g.edge_count == 0:
        raise ValueError("graph has no edges")
    rng = np.random.default_rng(seed)
    deg = g.degree()
    starts = np.flatnonzero(deg > 0)
    cur = np.tile(starts, walks_per_vertex)
    walks = np.empty((len(cur), walk_length), dtype=np.int64)
    walks[:, 0] = cur
    for step in range(1, walk_length):
        pick = (rng.random(len(cur)) * deg[cur]).astype(np.int64)
        cur = g.targets[g.offsets[cur] + np.minimum(pick, deg[cur] - 1)]
        walks[:, step] = cur
    return walks


@numba.njit(cache=True)
def _sgns_epoch(walks, window, negatives, table, emb, ctx, lr_start, lr_end,
                done, total, state):
    dim = emb.shape[1]
    grad = np.zeros(dim)
    loss = 0.0
    pairs = 0
    for w in range(walks.shape[0]):
        walk = walks[w]
        length = walk.shape[0]
        lr = lr_start - (lr_start - lr_end) * (done / total)
        if lr < lr_end:
            lr = lr_end
        for i in range(length):
            center = walk[i]
            lo = max(0, i - window)
            hi = min(length, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                target = walk[j]
                grad[:] = 0.0
                for k in range(negatives + 1):
                    if k == 0:
                        other = target
                        label = 1.0
                    else:
                        state = (state * np.uint64(25214903917) + np.uint64(11))
                        other = table[(state >> np.uint64(16)) % np.uint64(table.shape[0])]
                        if other == target:
                            continue
                        label = 0.0
                    dot = 0.0
                    for d in range(dim):
                        dot += emb[center, d] * ctx[other, d]
                    if dot > 30.0:
                        sig = 1.0
                    elif dot < -30.0:
                        sig = 0.0
                    else:
                        sig = 1.0 / (1.0 + np.exp(-dot))
                    p = sig if label == 1.0 else 1.0 - sig
                    loss -= np.log(max(p, 1e-12))
                    g = lr * (label - sig)
                    for d in range(dim):
                        grad[d] += g * ctx[other, d]
                        ctx[other, d] += g * emb[center, d]
                for d in range(dim):
                    emb[center, d] += grad[d]
                pairs += 1
        done += 1
    return loss, pairs, state


@dataclass
class EmbeddingMatrix:
    vectors: np.ndarray
    losses: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.vectors)


def train_skipgram(walks: np.ndarray, num_vertices: int | None = None, dim: int = 64,
                   window: int = 5, negatives: int = 5, epochs: int = 5,
                   lr: float = 0.025, min_lr: float = 0.0001, seed: int = 0,
                   table_size: int = 1_000_000) -> EmbeddingMatrix:
    """Skip-gram with negative sampling over a walk corpus.

    Noise vertices are drawn from a unigram^0.75 table; the learning rate
    decays linearly from ``lr`` to ``min_lr`` over all epochs.  Training is
    sequential SGD, so results are reproducible for a given seed.
    """
    walks = np.ascontiguousarray(walks, dtype=np.int64)
    if walks.size == 0:
        raise ValueError("empty corpus")
    n = int(walks.max()) + 1 if num_vertices is None else num_vertices
    counts = np.bincount(walks.ravel(), minlength=n).astype(np.float64)
    noise = counts ** 0.75
    noise /= noise.sum()
    table = np.repeat(np.arange(n), np.round(noise * table_size).astype(np.int64))
    if len(table) == 0:
        table = np.flatnonzero(counts > 0)
    rng = np.random.default_rng(seed)
    emb = (rng.random((n, dim)) - 0.5) / dim
    ctx = np.zeros((n, dim))
    state = np.uint64(rng.integers(1, 2**62))
    total = epochs * len(walks)
    losses = []
    for e in range(epochs):
        order = rng.permutation(len(walks))
        loss, pairs, state = _sgns_epoch(walks[order], window, negatives, table, emb, ctx,
                                         lr, min_lr, e * len(walks), total, state)
        state = np.uint64(state)
        losses.append(loss / max(pairs, 1))
        log.info("skip-gram epoch %d: mean loss %.4f", e + 1, losses[-1])
    if any(b > a for a, b in zip(losses, losses[1:])):
        log.warning("skip-gram epoch loss increased: %s", losses)
    return EmbeddingMatrix(emb, losses)


def deepwalk(g: Graph, dim: int = 64, walks_per_vertex: int = 10, walk_length: int = 40,
             window: int = 5, negatives: int = 5, epochs: int = 5, seed: int = 0) -> EmbeddingMatrix:
    walks = generate_walks(g, walks_per_vertex, walk_length, seed)
    return train_skipgram(walks, g.vertex_count, dim, window, negatives, epochs, seed=seed + 1)


def save_embeddings(emb: EmbeddingMatrix | np.ndarray, dest: TextIO | str, ids=None) -> None:
    """Header ``N D`` then ``vertex_id v1 ... vD`` per row (repr precision)."""
    if isinstance(dest, str):
        with open(dest, "w") as fh:
            return save_embeddings(emb, fh, ids)
    vec = emb.vectors if isinstance(emb, EmbeddingMatrix) else np.asarray(emb)
    ids = range(len(vec)) if ids is None else ids
    dest.write(f"{vec.shape[0]} {vec.shape[1]}\n")
    for vid, row in zip(ids, vec.tolist()):
        dest.write(f"{vid} " + " ".join(repr(x) for x in row) + "\n")


def load_embeddings(source: TextIO | str, g: Graph | None = None,
                    dim: int | None = None) -> EmbeddingMatrix:
    """Read the text format; rows are placed by vertex id (through ``g`` if given)."""
    if isinstance(source, str):
        with open(source) as fh:
            return load_embeddings(fh, g, dim)
    header = source.readline().split()
    if len(header) != 2:
        raise ValueError("embedding file needs an 'N D' header")
    count, d = int(header[0]), int(header[1])
    if dim is not None and d != dim:
        raise ValueError(f"embedding dimension {d} does not match configured {dim}")
    out = np.full((count, d), np.nan)
    rows = 0
    for lineno, line in enumerate(source, 2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != d + 1:
            raise ValueError(f"line {lineno}: expected {d} values, got {len(parts) - 1}")
        tok = parts[0]
        try:
            key = int(tok)
        except ValueError:
            key = tok
        idx = g.index_of(key) if g is not None else int(key)
        if not 0 <= idx < count:
            raise ValueError(f"line {lineno}: vertex {tok} out of range")
        out[idx] = [float(x) for x in parts[1:]]
        rows += 1
    if rows != count or np.isnan(out).any():
        raise ValueError(f"header declares {count} rows, file has {rows} distinct rows")
    return EmbeddingMatrix(out)
