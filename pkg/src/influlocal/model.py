"""DeepInf-GCN / DeepInf-GAT: input assembly, forward pass, training and attention analysis."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .autodiff import (Adagrad, Tensor, attention_support, concat, dropout, gcn_layer,
                       gcn_norm_adjacency, glorot_init, instance_norm, multi_head_stacked,
                       nll_loss)
from .eval import UndefinedMetricError, auc
from .feats import VertexFeatureTable, assemble_vertex_features

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


class UnsupportedVariantError(ValueError):
    pass


@dataclass
class DeepInfConfig:
    variant: str = "gat"
    layers: int = 3
    hidden: int = 128
    heads: int = 8
    head_dim: int = 16
    n: int = 50
    restart: float = 0.8
    embed_dim: int = 64
    use_vertex_features: bool = True
    use_instance_norm: bool = True
    freeze_embeddings: bool = True
    lr: float = 0.1
    weight_decay: float = 5e-4
    dropout: float = 0.2
    batch_size: int = 1024
    max_epochs: int = 500
    patience: int = 20
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.variant not in ("gcn", "gat"):
            raise UnsupportedVariantError(f"unknown variant {self.variant!r}")
        if self.layers < 2:
            raise ValueError("need at least two layers")
        if self.variant == "gat" and self.heads * self.head_dim != self.hidden:
            raise ValueError(f"heads * head_dim = {self.heads * self.head_dim} != hidden = {self.hidden}")

    @property
    def input_dim(self) -> int:
        return self.embed_dim + 2 + (7 if self.use_vertex_features else 0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DeepInfConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


class FeatureScaler:
    """Column z-scoring with statistics from the training instances' real rows."""

    def __init__(self, mean=None, std=None):
        self.mean, self.std = mean, std

    def fit(self, rows: np.ndarray) -> "FeatureScaler":
        self.mean = rows.mean(axis=0)
        std = rows.std(axis=0)
        self.std = np.where(std > 0, std, 1.0)
        return self

    def transform(self, rows: np.ndarray, pad_mask=None) -> np.ndarray:
        out = (rows - self.mean) / self.std
        if pad_mask is not None:
            out[np.asarray(pad_mask, dtype=bool)] = 0.0
        return out


def fit_feature_scaler(instances, table: VertexFeatureTable) -> FeatureScaler:
    rows = [assemble_vertex_features(table, inst)[~inst.pad_mask] for inst in instances]
    return FeatureScaler().fit(np.concatenate(rows))


def _embedding_rows(instance, emb: np.ndarray) -> np.ndarray:
    verts = np.asarray(instance.vertices)
    real = ~np.asarray(instance.pad_mask)
    if np.any(verts[real] >= len(emb)) or np.any(verts[real] < 0):
        raise ValueError("instance vertex has no embedding row")
    x = np.zeros((len(verts), emb.shape[1]))
    x[real] = emb[verts[real]]
    return x


def build_input_matrix(instance, emb, feats=None, use_instance_norm: bool = True,
                       eps: float = 1e-5) -> Tensor:
    """Rows: [normalized embedding | active flag | ego flag | optional vertex features].

    ``emb`` is the (vertex_count x D) embedding array; ``feats`` an optional
    n x 7 block already aligned with the instance rows.
    """
    emb = emb.vectors if hasattr(emb, "vectors") else np.asarray(emb)
    pad = np.asarray(instance.pad_mask, dtype=bool)
    x = _embedding_rows(instance, emb)
    if use_instance_norm:
        x = instance_norm(Tensor(x), pad, eps).data
    active = np.asarray(instance.active, dtype=np.float64) * ~pad
    ego = np.zeros(len(pad))
    ego[instance.ego_local] = 1.0
    blocks = [x, active[:, None], ego[:, None]]
    if feats is not None:
        feats = np.array(feats, dtype=np.float64)
        feats[pad] = 0.0
        blocks.append(feats)
    return Tensor(np.concatenate(blocks, axis=1))


@dataclass
class EncodedBatch:
    """Stacked per-instance arrays ready for the forward pass."""

    x: np.ndarray            # (B, n, F) input features; embedding block pre-normalized if frozen
    vertices: np.ndarray     # (B, n) global vertex ids, 0 for pads
    pad: np.ndarray          # (B, n)
    support: np.ndarray      # (B, n, n) bool
    a_norm: np.ndarray       # (B, n, n)
    ego: np.ndarray          # (B,)
    labels: np.ndarray       # (B,)

    def __len__(self):
        return len(self.labels)

    def take(self, idx) -> "EncodedBatch":
        return EncodedBatch(*(getattr(self, f.name)[idx] for f in fields(self)))


def encode_instances(instances, emb, config: DeepInfConfig, table: VertexFeatureTable | None = None,
                     scaler: FeatureScaler | None = None) -> EncodedBatch:
    emb = emb.vectors if hasattr(emb, "vectors") else np.asarray(emb)
    dtype = np.dtype(config.dtype)
    xs, verts, pads, sups, adjs, egos, labels = [], [], [], [], [], [], []
    for inst in instances:
        feats = None
        if config.use_vertex_features:
            if table is None:
                raise ValueError("vertex features requested but no feature table given")
            feats = assemble_vertex_features(table, inst)
            if scaler is not None:
                feats = scaler.transform(feats, inst.pad_mask)
        norm_now = config.use_instance_norm and config.freeze_embeddings
        x = build_input_matrix(inst, emb, feats, use_instance_norm=norm_now).data
        if not config.freeze_embeddings:
            x[:, :config.embed_dim] = 0.0
        xs.append(x)
        verts.append(np.where(inst.pad_mask, 0, inst.vertices))
        pads.append(np.asarray(inst.pad_mask, dtype=bool))
        sups.append(attention_support(inst.local_graph, inst.pad_mask))
        adjs.append(gcn_norm_adjacency(inst.local_graph, inst.pad_mask))
        egos.append(inst.ego_local)
        labels.append(inst.label)
    if xs and xs[0].shape[1] != config.input_dim:
        raise ValueError(f"input width {xs[0].shape[1]} != configured {config.input_dim}")
    return EncodedBatch(np.stack(xs).astype(dtype), np.stack(verts), np.stack(pads),
                        np.stack(sups), np.stack(adjs).astype(dtype),
                        np.array(egos, dtype=np.int64), np.array(labels, dtype=np.int64))


def _layer_widths(config: DeepInfConfig) -> list[int]:
    return [config.input_dim] + [config.hidden] * (config.layers - 1) + [2]


def init_params(config: DeepInfConfig, emb=None) -> dict[str, Tensor]:
    """Glorot-initialized weights and attention vectors, zero biases."""
    rng = np.random.default_rng([config.seed, 1])
    dtype = np.dtype(config.dtype)
    widths = _layer_widths(config)
    params = {}
    for l in range(config.layers):
        f_in, f_out = widths[l], widths[l + 1]
        if config.variant == "gcn":
            params[f"layer{l}.weight"] = glorot_init(f_in, f_out, rng, dtype=dtype)
            params[f"layer{l}.bias"] = np.zeros(f_out, dtype=dtype)
        else:
            last = l == config.layers - 1
            head_out = f_out if last else config.head_dim
            k = config.heads
            params[f"layer{l}.weight"] = glorot_init(f_in, head_out, rng, shape=(k, head_out, f_in),
                                                dtype=dtype)
            params[f"layer{l}.attn"] = glorot_init(2 * head_out, 1, rng, shape=(k, 2 * head_out),
                                                dtype=dtype)
            params[f"layer{l}.bias"] = np.zeros(head_out if last else k * head_out, dtype=dtype)
    if not config.freeze_embeddings:
        if emb is None:
            raise ValueError("trainable embeddings need an initial embedding matrix")
        vec = emb.vectors if hasattr(emb, "vectors") else emb
        params["embedding"] = np.array(vec, dtype=dtype)
    return {k: Tensor(v, requires_grad=True) for k, v in params.items()}


def decay_mask(params) -> dict[str, bool]:
    """Weight decay on weight matrices (and trainable embeddings) only."""
    return {k: not (k.endswith(".bias") or k.endswith(".attn")) for k in params}


def forward(params: dict, config: DeepInfConfig, batch: EncodedBatch, training: bool = False,
            rng=None, return_attention: bool = False):
    """Ego logits (B, 2); optionally also per-layer (input, attention) pairs."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    hidden = Tensor(batch.x)
    if "embedding" in params:
        rows = params["embedding"][batch.vertices]
        if config.use_instance_norm:
            rows = instance_norm(rows, batch.pad)
        else:
            rows = rows * (~batch.pad)[..., None].astype(rows.dtype)
        hidden = concat([rows, hidden[..., config.embed_dim:]], axis=-1)
    trace = []
    for l in range(config.layers):
        last = l == config.layers - 1
        act = "identity" if last else "elu"
        hidden = dropout(hidden, config.dropout, training, rng)
        if config.variant == "gcn":
            hidden = gcn_layer(hidden, batch.a_norm, params[f"layer{l}.weight"],
                               params[f"layer{l}.bias"], act)
        else:
            inp = hidden
            hidden, attn = multi_head_stacked(hidden, batch.support, params[f"layer{l}.weight"],
                                              params[f"layer{l}.attn"], params[f"layer{l}.bias"],
                                              mode="average" if last else "concat", act=act,
                                              return_attention=True)
            if return_attention:
                trace.append((inp.data, attn.data))
    logits = hidden[np.arange(len(batch)), batch.ego]
    return (logits, trace) if return_attention else logits


def _softmax_pos(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e[:, 1] / e.sum(axis=1)


def predict(params, config: DeepInfConfig, batch: EncodedBatch, chunk: int = 2048) -> np.ndarray:
    """Positive-class probability per instance (inference mode)."""
    out = []
    for s in range(0, len(batch), chunk):
        out.append(_softmax_pos(forward(params, config, batch.take(slice(s, s + chunk))).data))
    return np.concatenate(out).astype(np.float64) if out else np.zeros(0)


def _loss_on(params, config, batch, chunk=2048) -> tuple[float, np.ndarray]:
    total, probs = 0.0, []
    for s in range(0, len(batch), chunk):
        part = batch.take(slice(s, s + chunk))
        logits = forward(params, config, part)
        total += float(nll_loss(logits, part.labels, reduction="sum").data)
        probs.append(_softmax_pos(logits.data))
    return total / len(batch), np.concatenate(probs)


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    valid_loss: list = field(default_factory=list)
    valid_auc: list = field(default_factory=list)
    best_epoch: int = -1
    stop_reason: str = ""
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def snapshot(params: dict) -> dict[str, np.ndarray]:
    return {k: t.data.copy() for k, t in params.items()}


def fit_minibatch(params: dict, n_train: int, batch_loss, valid_eval, lr: float,
                  weight_decay: float, batch_size: int, max_epochs: int, patience: int,
                  seed: int, decay: dict | None = None, on_epoch=None):
    """Shared Adagrad loop with early stopping on validation loss.

    ``batch_loss(idx, rng)`` returns the scalar loss tensor of the training rows
    ``idx``; ``valid_eval()`` returns (validation loss, validation scores,
    validation labels).  Parameters end at the best-validation snapshot.
    """
    opt = Adagrad(params, lr, weight_decay, decay_mask=decay)
    shuffle_rng = np.random.default_rng([seed, 2])
    drop_rng = np.random.default_rng([seed, 3])
    hist = TrainHistory(stop_reason="max_epochs")
    best, best_loss, bad = snapshot(params), np.inf, 0
    t0 = time.perf_counter()
    for epoch in range(max_epochs):
        order = shuffle_rng.permutation(n_train)
        total = 0.0
        for s in range(0, n_train, batch_size):
            idx = order[s:s + batch_size]
            opt.zero_grad()
            loss = batch_loss(idx, drop_rng)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
            loss.backward()
            opt.step()
            total += value * len(idx)
        hist.train_loss.append(total / n_train)
        vloss, vscore, vlabels = valid_eval()
        try:
            vauc = auc(vlabels, vscore)
        except UndefinedMetricError:
            vauc = float("nan")
        hist.valid_loss.append(vloss)
        hist.valid_auc.append(vauc)
        if on_epoch is not None:
            on_epoch(epoch, hist)
        log.info("epoch %d train %.4f valid %.4f auc %.4f", epoch, hist.train_loss[-1], vloss, vauc)
        if vloss < best_loss:
            best_loss, best, bad = vloss, snapshot(params), 0
            hist.best_epoch = epoch
        else:
            bad += 1
            if patience and bad >= patience:
                hist.stop_reason = "patience"
                break
    hist.seconds = time.perf_counter() - t0
    for k, t in params.items():
        t.data[...] = best[k]
    return params, hist


def train(config: DeepInfConfig, train_set: EncodedBatch, valid_set: EncodedBatch,
          params: dict | None = None, emb=None, on_epoch=None):
    """Mini-batch Adagrad with early stopping on validation loss.

    Returns the best-validation parameters and the training history.
    """
    if len(train_set) == 0 or len(valid_set) == 0:
        raise ValueError("training and validation sets must be nonempty")
    params = init_params(config, emb) if params is None else params

    def batch_loss(idx, rng):
        batch = train_set.take(idx)
        return nll_loss(forward(params, config, batch, training=True, rng=rng), batch.labels)

    def valid_eval():
        vloss, vprob = _loss_on(params, config, valid_set)
        return vloss, vprob, valid_set.labels

    return fit_minibatch(params, len(train_set), batch_loss, valid_eval, config.lr,
                         config.weight_decay, config.batch_size, config.max_epochs,
                         config.patience, config.seed, decay_mask(params), on_epoch)


def params_from_arrays(arrays: dict) -> dict[str, Tensor]:
    return {k: Tensor(np.array(v), requires_grad=True) for k, v in arrays.items()}


def attention_scores(params, config: DeepInfConfig, batch: EncodedBatch) -> list[dict]:
    """Per instance: per GAT layer, every head's coefficient matrix and score vector.

    A head's score for vertex j is the neighbor half of its attention vector
    dotted with the projected input row j; each row of that head's
    coefficients ranks its support exactly as this score does.
    """
    if config.variant != "gat":
        raise UnsupportedVariantError("attention export needs the GAT variant")
    _, trace = forward(params, config, batch, return_attention=True)
    out = []
    for b in range(len(batch)):
        layers = []
        for l, (inp, attn) in enumerate(trace):
            weight = params[f"layer{l}.weight"].data.astype(np.float64)
            attn_vec = params[f"layer{l}.attn"].data.astype(np.float64)
            f_out = weight.shape[1]
            proj = np.einsum("kof,nf->kno", weight, inp[b].astype(np.float64))
            scores = np.einsum("kno,ko->kn", proj, attn_vec[:, f_out:])
            layers.append({"attention": attn[b].astype(np.float64), "scores": scores})
        out.append({"layers": layers, "support": batch.support[b], "pad": batch.pad[b],
                    "ego": int(batch.ego[b]), "label": int(batch.labels[b])})
    return out


def order_violations(attn: np.ndarray, scores: np.ndarray, support: np.ndarray,
                     tol: float = 0.0) -> int:
    """Count (i, j, k) with j, k in support(i) where attention and score disagree in order."""
    bad = 0
    for i in range(len(attn)):
        nb = np.flatnonzero(support[i])
        a, s = attn[i, nb], scores[nb]
        da = a[:, None] - a[None, :]
        ds = s[:, None] - s[None, :]
        bad += int(np.sum((da > tol) & (ds < -tol)) + np.sum((da < -tol) & (ds > tol)))
    return bad


def copy_params(params) -> dict:
    return {k: Tensor(t.data.copy(), requires_grad=True) for k, t in params.items()}
