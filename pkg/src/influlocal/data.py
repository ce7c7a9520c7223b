"""Action logs, instance generation, RWR sampling, splitting and synthetic cascades."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .feats import clustering_coefficient
from .graph import Graph, bfs_distances, induced_subgraph

log = logging.getLogger(__name__)

PAD = -1


class EmptyDatasetError(ValueError):
    pass


class SamplingError(ValueError):
    pass


class ActionLog:
    """Earliest activation time of each (user, action) pair.

    ``users`` are internal vertex indices; ``actions`` are arbitrary hashable ids.
    """

    def __init__(self, records: Iterable[tuple[int, object, int]], window=None):
        first: dict = {}
        for user, action, t in records:
            key = (int(user), action)
            t = int(t)
            if key not in first or t < first[key]:
                first[key] = t
        self._by_action: dict = {}
        for (user, action), t in first.items():
            self._by_action.setdefault(action, {})[user] = t
        times = list(first.values())
        if window is None:
            window = (min(times), max(times)) if times else (0, 0)
        self.window = (int(window[0]), int(window[1]))
        if times and (min(times) < self.window[0] or max(times) > self.window[1]):
            raise ValueError("activation time outside observation window")

    @property
    def actions(self) -> list:
        return sorted(self._by_action, key=lambda a: (str(type(a)), a))

    def activations(self, action) -> dict[int, int]:
        return self._by_action.get(action, {})

    def records(self):
        for a in self.actions:
            for u, t in sorted(self._by_action[a].items()):
                yield u, a, t

    def __len__(self):
        return sum(len(d) for d in self._by_action.values())

    def save(self, dest: TextIO | str, ids=None) -> None:
        if isinstance(dest, str):
            with open(dest, "w") as fh:
                return self.save(fh, ids)
        dest.write(f"# window {self.window[0]} {self.window[1]}\n")
        for u, a, t in self.records():
            dest.write(f"{u if ids is None else ids[u]} {a} {t}\n")

    @classmethod
    def load(cls, source: TextIO | str, g: Graph | None = None) -> "ActionLog":
        """Parse ``user action timestamp`` lines; user ids resolve through ``g``."""
        if isinstance(source, str):
            with open(source) as fh:
                return cls.load(fh, g)
        window, recs = None, []
        for lineno, line in enumerate(source, 1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "#":
                if len(parts) == 4 and parts[1] == "window":
                    window = (int(parts[2]), int(parts[3]))
                continue
            if parts[0].startswith("#"):
                continue
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'user action timestamp'")
            user = _as_id(parts[0])
            user = g.index_of(user) if g is not None else int(user)
            recs.append((user, _as_id(parts[1]), int(parts[2])))
        return cls(recs, window)


def _as_id(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


@dataclass(frozen=True)
class InstanceSpec:
    ego: int
    action: object
    time: int
    label: int


@dataclass
class SampledInstance:
    vertices: np.ndarray  # global index per slot, PAD for padding
    local_graph: Graph
    ego_local: int
    active: np.ndarray
    pad_mask: np.ndarray
    label: int
    action: object = None
    time: int = 0

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def ego(self) -> int:
        return int(self.vertices[self.ego_local])

    def to_record(self) -> dict:
        edges, _ = self.local_graph.edge_list()
        return {
            "vertices": [int(v) for v in self.vertices],
            "edges": edges.tolist(),
            "ego": int(self.ego_local),
            "active": [int(x) for x in self.active],
            "pad_mask": [int(x) for x in self.pad_mask],
            "label": int(self.label),
            "action": self.action,
            "time": int(self.time),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SampledInstance":
        n = len(rec["vertices"])
        return cls(
            vertices=np.array(rec["vertices"], dtype=np.int64),
            local_graph=Graph.from_edges(n, np.array(rec["edges"], dtype=np.int64).reshape(-1, 2)),
            ego_local=int(rec["ego"]),
            active=np.array(rec["active"], dtype=bool),
            pad_mask=np.array(rec["pad_mask"], dtype=bool),
            label=int(rec["label"]),
            action=rec.get("action"),
            time=int(rec.get("time", 0)),
        )


def save_instances(instances: Iterable[SampledInstance], dest: TextIO | str) -> None:
    """One JSON object per line, keys in a fixed order."""
    if isinstance(dest, str):
        with open(dest, "w") as fh:
            return save_instances(instances, fh)
    for inst in instances:
        dest.write(json.dumps(inst.to_record(), separators=(",", ":")) + "\n")


def load_instances(source: TextIO | str) -> list[SampledInstance]:
    if isinstance(source, str):
        with open(source) as fh:
            return load_instances(fh)
    return [SampledInstance.from_record(json.loads(line)) for line in source if line.strip()]


def active_neighbors(g: Graph, acts: dict[int, int], ego: int, t: int) -> list[int]:
    """Neighbors of ``ego`` whose first activation is at or before ``t``."""
    return [u for u in g.neighbors(ego).tolist() if u in acts and acts[u] <= t]


def build_instances(g: Graph, log_: ActionLog) -> list[InstanceSpec]:
    specs = []
    for a in log_.actions:
        acts = log_.activations(a)
        negatives: dict[int, int] = {}
        for v, t in acts.items():
            specs.append(InstanceSpec(v, a, t, 1))
            for u in g.neighbors(v).tolist():
                if u not in acts and t < negatives.get(u, np.iinfo(np.int64).max):
                    negatives[u] = t
        specs.extend(InstanceSpec(u, a, t, 0) for u, t in negatives.items())
    specs.sort(key=lambda s: (str(s.action), s.time, s.ego, s.label))
    return specs


def filter_and_balance(specs: Sequence[InstanceSpec], g: Graph, log_: ActionLog,
                       min_active: int = 3, neg_pos: float = 3.0, seed: int = 0,
                       downsample_positives: bool = True) -> list[InstanceSpec]:
    """Keep egos with enough active neighbors, then subsample toward ``neg_pos``.

    With more than ``floor(neg_pos * positives)`` negatives, negatives are
    subsampled; with fewer, positives are cut to ``ceil(negatives / neg_pos)``
    (unless ``downsample_positives`` is off).  Nothing is upsampled.
    """
    kept = [s for s in specs
            if len(active_neighbors(g, log_.activations(s.action), s.ego, s.time)) >= min_active]
    pos = [i for i, s in enumerate(kept) if s.label == 1]
    neg = [i for i, s in enumerate(kept) if s.label == 0]
    if not pos:
        raise EmptyDatasetError("no positive instances survive the active-neighbor filter")
    rng = np.random.default_rng(seed)
    target = int(np.floor(neg_pos * len(pos)))
    if len(neg) > target:
        neg = sorted(rng.choice(neg, size=target, replace=False).tolist())
    elif downsample_positives and neg:
        keep_pos = int(np.ceil(len(neg) / neg_pos))
        if keep_pos < len(pos):
            pos = sorted(rng.choice(pos, size=keep_pos, replace=False).tolist())
    chosen = sorted(pos + neg)
    log.info("balanced %d positives / %d negatives (ratio %.3f)",
             len(pos), len(neg), len(neg) / len(pos))
    return [kept[i] for i in chosen]


class _WeightedStepper:
    """Draws weighted neighbor moves from one global cumulative-weight array."""

    def __init__(self, g: Graph):
        self.offsets = g.offsets
        self.cum = np.cumsum(g.weights)
        self.targets = g.targets

    def step(self, v: int, r: float) -> int:
        lo, hi = int(self.offsets[v]), int(self.offsets[v + 1])
        if lo == hi:
            return -1
        base = self.cum[lo - 1] if lo else 0.0
        x = base + r * (self.cum[hi - 1] - base)
        j = int(np.searchsorted(self.cum[lo:hi], x, side="right")) + lo
        return int(self.targets[min(j, hi - 1)])


def _uniforms(rng, block=4096):
    while True:
        yield from rng.random(block).tolist()


def rwr_walk(g: Graph, start_set: Sequence[int], restart: float, rng,
             n: int | None = None, max_steps: int = 5000, allowed=None,
             stepper: _WeightedStepper | None = None):
    """Random walk with restart over ``g``.

    The walk begins at a uniform member of ``start_set``; at every step it
    jumps back to a fresh uniform member with probability ``restart``,
    otherwise moves to a neighbor drawn proportional to edge weight.  Moves
    leaving ``allowed`` (if given) or hitting a dead end count as restarts.

    Returns the distinct vertices in order of first visit, stopping once ``n``
    are collected (``n=None`` never stops early), plus the full state trace.
    """
    if not 0.0 < restart <= 1.0:
        raise ValueError("restart probability must be in (0, 1]")
    start_set = list(start_set)
    stepper = stepper or _WeightedStepper(g)
    u = _uniforms(rng)
    k = len(start_set)
    cur = start_set[min(int(next(u) * k), k - 1)]
    seen = {cur: None}
    trace = [cur]
    for _ in range(max_steps):
        if n is not None and len(seen) >= n:
            break
        if next(u) < restart:
            nxt = start_set[min(int(next(u) * k), k - 1)]
        else:
            nxt = stepper.step(cur, next(u))
            if nxt < 0 or (allowed is not None and nxt not in allowed):
                nxt = start_set[min(int(next(u) * k), k - 1)]
        cur = nxt
        trace.append(cur)
        if cur not in seen:
            seen[cur] = None
    return list(seen), trace


def rwr_sample(g: Graph, spec: InstanceSpec, log_: ActionLog, n: int = 50,
               restart: float = 0.8, max_steps: int | None = None, seed=0,
               radius: int | None = None, stepper=None) -> SampledInstance:
    """Fixed-size sub-network around ``spec.ego`` collected by RWR.

    Walks restart on the ego or one of its active neighbors at ``spec.time``.
    Fewer than ``n`` collected vertices are completed with inert pad slots.
    """
    acts = log_.activations(spec.action)
    act_nb = active_neighbors(g, acts, spec.ego, spec.time)
    if not act_nb:
        raise SamplingError(f"ego {spec.ego} has no active neighbor at t={spec.time}")
    start = [spec.ego] + act_nb
    allowed = None if radius is None else set(bfs_distances(g, spec.ego, radius))
    rng = np.random.default_rng(seed)
    collected, _ = rwr_walk(g, start, restart, rng, n=n,
                            max_steps=100 * n if max_steps is None else max_steps,
                            allowed=allowed, stepper=stepper)
    if spec.ego not in collected:
        collected = [spec.ego] + collected[: n - 1]
    sub, remap = induced_subgraph(g, collected)
    real = len(collected)
    vertices = np.full(n, PAD, dtype=np.int64)
    vertices[:real] = sorted(collected)
    edges, w = sub.edge_list()
    local = Graph.from_edges(n, edges, w)
    active = np.zeros(n, dtype=bool)
    for i in range(real):
        v = int(vertices[i])
        active[i] = v != spec.ego and v in acts and acts[v] <= spec.time
    pad = np.zeros(n, dtype=bool)
    pad[real:] = True
    return SampledInstance(vertices, local, remap[spec.ego], active, pad, spec.label,
                           spec.action, spec.time)


def sample_all(g: Graph, specs: Sequence[InstanceSpec], log_: ActionLog, n: int = 50,
               restart: float = 0.8, seed: int = 0, radius=None) -> list[SampledInstance]:
    """Sample every spec; instance ``i`` uses the RNG stream seeded by (seed, i)."""
    stepper = _WeightedStepper(g)
    return [rwr_sample(g, s, log_, n=n, restart=restart, seed=[seed, i], radius=radius,
                       stepper=stepper)
            for i, s in enumerate(specs)]


def _largest_remainder(total: int, fractions: Sequence[float]) -> list[int]:
    raw = [total * f for f in fractions]
    sizes = [int(np.floor(x)) for x in raw]
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in order[: total - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split(specs: Sequence, fractions=(0.75, 0.125, 0.125), seed: int = 0):
    """Stratified seeded split into train/valid/test (largest-remainder sizes per class)."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[] for _ in fractions]
    for label in (1, 0):
        idx = [i for i, s in enumerate(specs) if s.label == label]
        idx = [idx[j] for j in rng.permutation(len(idx))]
        sizes = _largest_remainder(len(idx), fractions)
        pos = 0
        for part, size in zip(parts, sizes):
            part.extend(idx[pos:pos + size])
            pos += size
    out = []
    for name, part in zip(("train", "valid", "test"), parts):
        part = [part[j] for j in rng.permutation(len(part))]
        if not any(specs[i].label == 1 for i in part):
            warnings.warn(f"{name} split has no positive instances")
        out.append([specs[i] for i in part])
    return tuple(out)


def small_world(n: int, k: int, p: float, rng) -> Graph:
    """Watts-Strogatz ring lattice (k nearest neighbors) with rewiring probability p."""
    if k % 2 or k >= n:
        raise ValueError("k must be even and smaller than n")
    adj = [set() for _ in range(n)]
    for v in range(n):
        for j in range(1, k // 2 + 1):
            u = (v + j) % n
            adj[v].add(u)
            adj[u].add(v)
    for j in range(1, k // 2 + 1):
        for v in range(n):
            u = (v + j) % n
            if u in adj[v] and rng.random() < p:
                w = int(rng.integers(n))
                if w == v or w in adj[v]:
                    continue
                adj[v].discard(u)
                adj[u].discard(v)
                adj[v].add(w)
                adj[w].add(v)
    edges = [(v, u) for v in range(n) for u in adj[v] if v < u]
    return Graph.from_edges(n, np.array(edges, dtype=np.int64))


def scale_free(n: int, m: int, rng) -> Graph:
    """Barabasi-Albert preferential attachment, ``m`` edges per new vertex."""
    if m < 1 or m >= n:
        raise ValueError("need 1 <= m < n")
    edges = []
    repeated: list[int] = []
    targets = list(range(m))
    for v in range(m, n):
        edges.extend((v, t) for t in targets)
        repeated.extend(targets)
        repeated.extend([v] * m)
        chosen: set[int] = set()
        while len(chosen) < m:
            chosen.add(repeated[int(rng.integers(len(repeated)))])
        targets = sorted(chosen)
    return Graph.from_edges(n, np.array(edges, dtype=np.int64))


def independent_cascade(g: Graph, seeds: Sequence[int], edge_prob, rounds: int, rng) -> dict[int, int]:
    """Activation round of every vertex reached from ``seeds``.

    Each round draws one uniform per directed arc; a vertex activated in
    round r succeeds on arc (u, v) in round r+1 iff its draw is below the
    arc's probability.  ``edge_prob`` is a scalar or a per-arc array.
    """
    n = g.vertex_count
    prob = np.broadcast_to(np.asarray(edge_prob, dtype=np.float64), g.targets.shape)
    src = np.repeat(np.arange(n), g.degree())
    time = np.full(n, -1, dtype=np.int64)
    time[list(seeds)] = 0
    frontier = np.zeros(n, dtype=bool)
    frontier[list(seeds)] = True
    for r in range(1, rounds + 1):
        draws = rng.random(len(g.targets))
        hit = frontier[src] & (draws < prob)
        new = np.zeros(n, dtype=bool)
        new[g.targets[hit]] = True
        new &= time < 0
        if not new.any():
            break
        time[new] = r
        frontier = new
    return {int(v): int(time[v]) for v in np.flatnonzero(time >= 0)}


def tie_strength_probs(g: Graph, strong_prob: float, threshold: int,
                       weak_prob: float = 0.0) -> np.ndarray:
    """Per-arc IC probabilities aligned with ``g.targets`` from embeddedness.

    An arc whose endpoints share at least ``threshold`` neighbors is a strong
    tie and transmits with ``strong_prob``; every other arc uses ``weak_prob``.
    """
    a = g.adjacency(dense=False)
    common = (a @ a).tocsr()
    src = np.repeat(np.arange(g.vertex_count), g.degree())
    shared = np.asarray(common[src, g.targets]).ravel()
    return np.where(shared >= threshold, strong_prob, weak_prob)


def influencer_probs(g: Graph, strength: np.ndarray, strong_fraction: float,
                     strong_prob: float, weak_prob: float = 0.0) -> np.ndarray:
    """Per-arc IC probabilities aligned with ``g.targets`` from the source's attribute.

    Vertices whose ``strength`` lies in the top ``strong_fraction`` quantile
    are strong influencers: all their arcs transmit with ``strong_prob``;
    every other arc uses ``weak_prob``.
    """
    if not 0.0 < strong_fraction <= 1.0:
        raise ValueError("strong_fraction must be in (0, 1]")
    strength = np.asarray(strength, dtype=np.float64)
    strong = strength >= np.quantile(strength, 1.0 - strong_fraction)
    per_vertex = np.where(strong, strong_prob, weak_prob)
    return np.repeat(per_vertex, g.degree())


def synth_cascades(topology: str = "small-world", vertices: int = 1000, params=None,
                   edge_prob: float = 0.1, seeds_fraction: float = 0.01, rounds: int = 10,
                   seed: int = 0, actions: int = 1):
    """Random topology plus ``actions`` independent-cascade logs on it.

    ``params``: ``k`` and ``p`` for small-world, ``m`` for scale-free, and
    ``influence``: "uniform" (every arc uses ``edge_prob``), "tie" (see
    ``tie_strength_probs``; ``tie_threshold``, ``weak_prob``) or "clustering"
    (see ``influencer_probs`` with the clustering coefficient as strength;
    ``strong_fraction``, ``weak_prob``).
    """
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must be in [0, 1]")
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    if topology in ("small-world", "small_world"):
        g = small_world(vertices, int(params.get("k", 10)), float(params.get("p", 0.1)), rng)
    elif topology in ("scale-free", "scale_free"):
        g = scale_free(vertices, int(params.get("m", 3)), rng)
    else:
        raise ValueError(f"unknown topology {topology!r}")
    influence = params.get("influence", "uniform")
    weak = float(params.get("weak_prob", 0.0))
    if not 0.0 <= weak <= 1.0:
        raise ValueError("weak_prob must be in [0, 1]")
    if influence == "uniform":
        prob = edge_prob
    elif influence == "tie":
        prob = tie_strength_probs(g, edge_prob, int(params.get("tie_threshold", 3)), weak)
    elif influence == "clustering":
        prob = influencer_probs(g, clustering_coefficient(g),
                                float(params.get("strong_fraction", 0.1)), edge_prob, weak)
    else:
        raise ValueError(f"unknown influence model {influence!r}")
    n_seeds = max(1, int(round(seeds_fraction * vertices)))
    records = []
    for a in range(actions):
        seeds = rng.choice(vertices, size=n_seeds, replace=False)
        times = independent_cascade(g, seeds, prob, rounds, rng)
        records.extend((v, a, t) for v, t in sorted(times.items()))
    return g, ActionLog(records, window=(0, rounds))
