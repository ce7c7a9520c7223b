"""Comparison methods: linear models on hand-crafted features, and PSCN."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Tensor, conv1d, dropout, linear, nll_loss
from .autodiff.optim import glorot_init
from .feats import INSTANCE_COLUMNS, VertexFeatureTable, assemble_vertex_features, ego_features
from .graph import Graph
from .model import EncodedBatch, FeatureScaler, fit_minibatch, _softmax_pos

EGO_COLUMNS = ("num_active", "ratio_active", "active_density", "active_components")


def baseline_columns(embed_dim: int = 64) -> list[str]:
    return list(INSTANCE_COLUMNS) + [f"emb{i}" for i in range(embed_dim)] + list(EGO_COLUMNS)


def baseline_feature_vector(instance, g: Graph, table: VertexFeatureTable, emb) -> np.ndarray:
    """Ego vertex features (7), ego embedding, ego-network features (4)."""
    emb = emb.vectors if hasattr(emb, "vectors") else np.asarray(emb)
    vertex = assemble_vertex_features(table, instance)[instance.ego_local]
    ego = int(instance.vertices[instance.ego_local])
    return np.concatenate([vertex, emb[ego], ego_features(instance, g).as_array()])


def baseline_features(instances, g: Graph, table: VertexFeatureTable, emb) -> np.ndarray:
    rows = [baseline_feature_vector(inst, g, table, emb) for inst in instances]
    width = len(INSTANCE_COLUMNS) + np.shape(getattr(emb, "vectors", emb))[1] + len(EGO_COLUMNS)
    return np.array(rows, dtype=np.float64).reshape(len(rows), width)


def save_baseline_features(path: str, x: np.ndarray, labels, columns=None) -> None:
    columns = columns or baseline_columns(x.shape[1] - len(INSTANCE_COLUMNS) - len(EGO_COLUMNS))
    with open(path, "w") as fh:
        fh.write(" ".join(list(columns) + ["label"]) + "\n")
        for row, y in zip(x, labels):
            fh.write(" ".join(repr(float(v)) for v in row) + f" {int(y)}\n")


def load_baseline_features(path: str) -> tuple[np.ndarray, np.ndarray, list[str]]:
    with open(path) as fh:
        header = fh.readline().split()
        data = np.loadtxt(fh, ndmin=2)
    return data[:, :-1], data[:, -1].astype(np.int64), header[:-1]


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    kind: str = "logistic"
    weight_norms: list = field(default_factory=list)

    def margin(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.weights + self.bias

    def score(self, x) -> np.ndarray:
        """Sigmoid probability for logistic models, raw margin for hinge."""
        m = self.margin(x)
        return 1.0 / (1.0 + np.exp(-m)) if self.kind == "logistic" else m

    @property
    def threshold(self) -> float:
        return 0.5 if self.kind == "logistic" else 0.0

    def to_arrays(self) -> dict:
        return {"weights": self.weights, "bias": np.array([self.bias])}


def linear_train(features, labels, kind: str = "logistic", l2: float = 1e-4, epochs: int = 50,
                 lr: float = 0.01, seed: int = 0, batch_size: int = 32) -> LinearModel:
    """Mini-batch SGD on L2-regularized logistic or hinge loss.

    The regularizer is (l2 / 2) * |w|^2 and does not touch the bias.
    """
    if kind not in ("logistic", "hinge"):
        raise ValueError(f"unknown linear model {kind!r}")
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("empty training set")
    sign = 2.0 * y - 1.0
    rng = np.random.default_rng(seed)
    w, b = np.zeros(x.shape[1]), 0.0
    model = LinearModel(w, b, kind)
    for _ in range(epochs):
        order = rng.permutation(len(x))
        for s in range(0, len(x), batch_size):
            idx = order[s:s + batch_size]
            m = x[idx] @ w + b
            if kind == "logistic":
                coef = 1.0 / (1.0 + np.exp(-m)) - y[idx]
            else:
                coef = np.where(sign[idx] * m < 1.0, -sign[idx], 0.0)
            gw = x[idx].T @ coef / len(idx) + l2 * w
            gb = coef.mean()
            w -= lr * gw
            b -= lr * gb
        model.weight_norms.append(float(np.linalg.norm(w)))
    model.weights, model.bias = w, float(b)
    return model


# PSCN

@dataclass
class PSCNConfig:
    width: int = 16
    k: int = 5
    conv1_channels: int = 16
    conv1_kernel: int = 5
    conv1_stride: int = 5
    conv2_channels: int = 8
    conv2_kernel: int = 1
    conv2_stride: int = 1
    lr: float = 0.1
    weight_decay: float = 5e-4
    dropout: float = 0.2
    batch_size: int = 1024
    max_epochs: int = 500
    patience: int = 20
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if min(self.width, self.k, self.conv1_channels, self.conv2_channels) < 1:
            raise ValueError("PSCN sizes must be positive")

    @property
    def sequence_length(self) -> int:
        return self.width * self.k

    def conv_lengths(self) -> tuple[int, int]:
        l1 = (self.sequence_length - self.conv1_kernel) // self.conv1_stride + 1
        l2 = (l1 - self.conv2_kernel) // self.conv2_stride + 1
        return l1, l2

    def to_dict(self) -> dict:
        return asdict(self)


def _bfs_rank(instance) -> np.ndarray:
    """Position of every local vertex in the tie-broken BFS order from the ego.

    Within a depth, active vertices come first, then lower local index.  Pads
    and vertices unreachable from the ego get rank n (never selected).
    """
    lg = instance.local_graph
    n = instance.n
    active = np.asarray(instance.active, dtype=bool)
    pad = np.asarray(instance.pad_mask, dtype=bool)
    depth = np.full(n, -1)
    depth[instance.ego_local] = 0
    frontier = [instance.ego_local]
    while frontier:
        nxt = []
        for v in frontier:
            for u in lg.neighbors(v).tolist():
                if depth[u] < 0 and not pad[u]:
                    depth[u] = depth[v] + 1
                    nxt.append(u)
        frontier = nxt
    reach = np.flatnonzero(depth >= 0)
    order = sorted(reach.tolist(), key=lambda v: (depth[v], not active[v], v))
    rank = np.full(n, n)
    rank[order] = np.arange(len(order))
    return rank


def receptive_field_index(instance, cfg: PSCNConfig) -> np.ndarray:
    """(width * k) local indices; -1 marks an all-zero padding slot."""
    rank = _bfs_rank(instance)
    n = instance.n
    chosen = [v for v in np.argsort(rank, kind="stable").tolist() if rank[v] < n][:cfg.width]
    lg = instance.local_graph
    out = np.full((cfg.width, cfg.k), -1, dtype=np.int64)
    for slot, v in enumerate(chosen):
        nbrs = [u for u in lg.neighbors(v).tolist() if rank[u] < n]
        nbrs.sort(key=lambda u: rank[u])
        field_ = ([v] + nbrs)[:cfg.k]
        out[slot, :len(field_)] = field_
    return out.reshape(-1)


def pscn_receptive_fields(instance, cfg: PSCNConfig, feats: np.ndarray) -> np.ndarray:
    """Rows of ``feats`` (n x F) in receptive-field order, zeros for padding."""
    idx = receptive_field_index(instance, cfg)
    feats = np.asarray(feats)
    out = np.zeros((len(idx), feats.shape[1]), dtype=feats.dtype)
    out[idx >= 0] = feats[idx[idx >= 0]]
    return out


def pscn_encode(instances, batch: EncodedBatch, cfg: PSCNConfig) -> np.ndarray:
    """(B, width * k, F) inputs built from the DeepInf input block of each instance."""
    return np.stack([pscn_receptive_fields(inst, cfg, batch.x[i])
                     for i, inst in enumerate(instances)]).astype(cfg.dtype)


def pscn_init(cfg: PSCNConfig, in_features: int) -> dict[str, Tensor]:
    rng = np.random.default_rng([cfg.seed, 1])
    dtype = np.dtype(cfg.dtype)
    _, l2 = cfg.conv_lengths()
    c1, c2 = cfg.conv1_channels, cfg.conv2_channels
    params = {
        "conv1.weight": glorot_init(in_features * cfg.conv1_kernel, c1 * cfg.conv1_kernel, rng,
                               shape=(c1, in_features, cfg.conv1_kernel), dtype=dtype),
        "conv1.bias": np.zeros(c1, dtype=dtype),
        "conv2.weight": glorot_init(c1 * cfg.conv2_kernel, c2 * cfg.conv2_kernel, rng,
                               shape=(c2, c1, cfg.conv2_kernel), dtype=dtype),
        "conv2.bias": np.zeros(c2, dtype=dtype),
        "dense.weight": glorot_init(l2 * c2, 2, rng, dtype=dtype),
        "dense.bias": np.zeros(2, dtype=dtype),
    }
    return {k: Tensor(v, requires_grad=True) for k, v in params.items()}


def pscn_forward(params, cfg: PSCNConfig, x, training: bool = False, rng=None) -> Tensor:
    """conv1 -> ELU -> conv2 -> ELU -> flatten -> dense, giving (B, 2) logits."""
    hidden = dropout(Tensor(x), cfg.dropout, training, rng)
    hidden = conv1d(hidden, params["conv1.weight"], params["conv1.bias"], cfg.conv1_stride).elu()
    hidden = conv1d(hidden, params["conv2.weight"], params["conv2.bias"], cfg.conv2_stride).elu()
    hidden = hidden.reshape(hidden.shape[0], hidden.shape[1] * hidden.shape[2])
    return linear(hidden, params["dense.weight"], params["dense.bias"])


def pscn_predict(params, cfg: PSCNConfig, x, chunk: int = 4096) -> np.ndarray:
    out = [_softmax_pos(pscn_forward(params, cfg, x[s:s + chunk]).data)
           for s in range(0, len(x), chunk)]
    return np.concatenate(out).astype(np.float64) if out else np.zeros(0)


def pscn_train(cfg: PSCNConfig, x_train, y_train, x_valid, y_valid, params=None, on_epoch=None):
    """Adagrad with early stopping, sharing the DeepInf training loop."""
    y_train = np.asarray(y_train, dtype=np.int64)
    y_valid = np.asarray(y_valid, dtype=np.int64)
    if len(y_train) == 0 or len(y_valid) == 0:
        raise ValueError("training and validation sets must be nonempty")
    params = pscn_init(cfg, x_train.shape[-1]) if params is None else params

    def batch_loss(idx, rng):
        return nll_loss(pscn_forward(params, cfg, x_train[idx], True, rng), y_train[idx])

    def valid_eval():
        logits = pscn_forward(params, cfg, x_valid)
        loss = float(nll_loss(logits, y_valid).data)
        return loss, _softmax_pos(logits.data), y_valid

    decay = {k: k.endswith(".weight") for k in params}
    return fit_minibatch(params, len(y_train), batch_loss, valid_eval, cfg.lr, cfg.weight_decay,
                         cfg.batch_size, cfg.max_epochs, cfg.patience, cfg.seed, decay, on_epoch)
