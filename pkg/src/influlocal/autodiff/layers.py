"""Differentiable building blocks for DeepInf and PSCN."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, as_tensor, concat, stack


class ShapeError(ValueError):
    pass


def instance_norm(x: Tensor, pad_mask=None, eps: float = 1e-5) -> Tensor:
    """Standardize each column of ``x`` (..., n, D) over its unpadded rows.

    Uses the population variance.  Padded rows come out as zeros.
    """
    x = as_tensor(x)
    n = x.shape[-2]
    if pad_mask is None:
        pad_mask = np.zeros(x.shape[:-1], dtype=bool)
    real = (~np.asarray(pad_mask, dtype=bool)).astype(x.dtype)[..., None]
    count = real.sum(axis=-2, keepdims=True)
    if np.any(count == 0):
        raise ShapeError("instance_norm needs at least one unpadded row")
    assert real.shape[-2] == n
    # shift by a constant real row first so constant columns cancel exactly
    first = np.argmax(real[..., 0], axis=-1)[..., None, None]
    ref = np.take_along_axis(x.data, first, axis=-2)
    shifted = x - ref
    mu = (shifted * real).sum(axis=-2, keepdims=True) / count
    centered = (shifted - mu) * real
    var = (centered * centered).sum(axis=-2, keepdims=True) / count
    return centered * (var + eps) ** -0.5


def gcn_norm_adjacency(local_graph, pad_mask=None) -> np.ndarray:
    """D^-1/2 (A + I) D^-1/2 with self-loops on real vertices.

    Padded vertices keep only a unit diagonal entry.
    """
    a = local_graph.adjacency(dense=True)
    n = len(a)
    if pad_mask is not None:
        pad = np.asarray(pad_mask, dtype=bool)
        a[pad, :] = 0.0
        a[:, pad] = 0.0
    a = a + np.eye(n)
    d = a.sum(axis=1)
    s = 1.0 / np.sqrt(d)
    return s[:, None] * a * s[None, :]


def attention_support(local_graph, pad_mask=None) -> np.ndarray:
    """Boolean n x n mask of edges plus self-loops."""
    a = local_graph.adjacency(dense=True) > 0
    if pad_mask is not None:
        pad = np.asarray(pad_mask, dtype=bool)
        a[pad, :] = False
        a[:, pad] = False
    return a | np.eye(len(a), dtype=bool)


def activation(x: Tensor, kind: str = "elu", slope: float = 0.2) -> Tensor:
    if kind == "elu":
        return x.elu()
    if kind == "leaky_relu":
        return x.leaky_relu(slope)
    if kind in ("identity", None):
        return x
    raise ValueError(f"unknown activation {kind!r}")


def _check_linear(feats: Tensor, weight: Tensor):
    if weight.ndim != 2 or feats.shape[-1] != weight.shape[1]:
        raise ShapeError(f"cannot apply weight {weight.shape} to input with {feats.shape[-1]} features")


def gcn_layer(feats, a_norm, weight: Tensor, bias: Tensor, act: str = "elu") -> Tensor:
    """act(a_norm @ feats @ weight.T + bias); ``a_norm`` is (..., n, n), ``weight`` F_out x F_in."""
    feats = as_tensor(feats)
    _check_linear(feats, weight)
    a_norm = as_tensor(a_norm, feats.dtype)
    if a_norm.shape[-1] != feats.shape[-2]:
        raise ShapeError("adjacency and feature row counts differ")
    return activation(a_norm @ (feats @ weight.T) + bias, act)


def _gat_head(feats: Tensor, support, weight: Tensor, attn_vec: Tensor, slope: float):
    _check_linear(feats, weight)
    f_out = weight.shape[0]
    if attn_vec.shape != (2 * f_out,):
        raise ShapeError(f"attention vector must have length {2 * f_out}, got {attn_vec.shape}")
    proj = feats @ weight.T
    src = proj @ attn_vec[:f_out].reshape(f_out, 1)       # term of the attending row
    dst = proj @ attn_vec[f_out:].reshape(f_out, 1)       # term of the attended neighbor
    logits = (src + dst.swapaxes(-1, -2)).leaky_relu(slope)
    return logits.masked_softmax(support, axis=-1), proj, dst


def attention_softmax(src: Tensor, dst: Tensor, support, slope: float = 0.2) -> Tensor:
    """softmax_j(LeakyReLU(src_i + dst_j)) over ``support``, as one fused op.

    ``src`` and ``dst`` are (..., n, 1).  Equivalent to composing the add,
    leaky_relu and masked_softmax ops but keeps only the output and a sign
    mask for the backward pass.
    """
    support = np.asarray(support, dtype=bool)
    if not np.all(support.any(axis=-1)):
        raise ValueError("softmax row with empty support")
    z = src.data + np.swapaxes(dst.data, -1, -2)
    pos = z > 0
    z = np.where(pos, z, slope * z)
    z = np.where(support, z, -np.inf)
    z -= z.max(axis=-1, keepdims=True)
    out = np.exp(z, out=z)
    out /= out.sum(axis=-1, keepdims=True)
    del z

    def bw(g):
        go = g * out
        go -= out * go.sum(axis=-1, keepdims=True)
        go = np.where(pos, go, slope * go)
        if src.requires_grad:
            src._acc(go.sum(axis=-1, keepdims=True))
        if dst.requires_grad:
            dst._acc(np.swapaxes(go.sum(axis=-2, keepdims=True), -1, -2))
    return src._make(out.astype(src.dtype, copy=False), (src, dst), "attention_softmax", bw)


def gat_attention(feats, support, weight: Tensor, attn_vec: Tensor, slope: float = 0.2) -> Tensor:
    """Attention coefficient matrix, softmax-normalized over each row's support."""
    return _gat_head(as_tensor(feats), np.asarray(support, dtype=bool), weight, attn_vec, slope)[0]


def gat_scores(feats, weight: Tensor, attn_vec: Tensor) -> np.ndarray:
    """Per-vertex score (neighbor half of ``attn_vec``) . (weight @ feats_j).

    Every row of the head's attention orders its support by this score.
    """
    f_out = weight.shape[0]
    rows = np.asarray(feats.data if isinstance(feats, Tensor) else feats)
    return (rows @ weight.data.T) @ attn_vec.data[f_out:]


def multi_head(feats, support, heads, bias: Tensor, mode: str = "concat", act: str = "elu",
               slope: float = 0.2, return_attention: bool = False):
    """Independent attention heads, aggregated, then bias and activation.

    ``heads`` is a sequence of (weight, attn_vec) pairs.  ``mode`` is
    ``concat`` (width heads * F_out) or ``average`` (width F_out).
    """
    if not heads:
        raise ShapeError("need at least one head")
    shapes = {(wt.shape, av.shape) for wt, av in heads}
    if len(shapes) != 1:
        raise ShapeError(f"heads have inconsistent shapes {shapes}")
    weight = stack([wt for wt, _ in heads], axis=0)
    attn_vec = stack([av for _, av in heads], axis=0)
    return multi_head_stacked(feats, support, weight, attn_vec, bias, mode, act, slope,
                              return_attention)


def multi_head_stacked(feats, support, weight: Tensor, attn_vec: Tensor, bias: Tensor,
                       mode: str = "concat", act: str = "elu", slope: float = 0.2,
                       return_attention: bool = False):
    """All heads at once: ``weight`` is (heads, F_out, F_in), ``attn_vec`` (heads, 2 F_out).

    ``feats`` is (..., n, F_in) and ``support`` (..., n, n).  Attention
    tensors have shape (..., heads, n, n).
    """
    feats = as_tensor(feats)
    support = np.asarray(support, dtype=bool)
    n_heads, f_out, f_in = weight.shape
    if feats.shape[-1] != f_in:
        raise ShapeError(f"heads expect {f_in} features, got {feats.shape[-1]}")
    if attn_vec.shape != (n_heads, 2 * f_out):
        raise ShapeError(f"attention vectors must be ({n_heads}, {2 * f_out}), got {attn_vec.shape}")
    lead = feats.shape[:-2]
    n = feats.shape[-2]
    rows = feats.reshape(lead + (1, n, f_in))
    proj = rows @ weight.swapaxes(-1, -2)                                  # (..., heads, n, F_out)
    src = proj @ attn_vec[:, :f_out].reshape(n_heads, f_out, 1)            # (..., heads, n, 1)
    dst = proj @ attn_vec[:, f_out:].reshape(n_heads, f_out, 1)
    coef = attention_softmax(src, dst, np.expand_dims(support, -3), slope)  # (..., heads, n, n)
    out = coef @ proj                                                      # (..., heads, n, F_out)
    nd = out.ndim
    if mode == "concat":
        perm = tuple(range(nd - 3)) + (nd - 2, nd - 3, nd - 1)
        agg = out.transpose(perm).reshape(lead + (n, n_heads * f_out))
    elif mode == "average":
        agg = out.mean(axis=nd - 3)
    else:
        raise ValueError(f"unknown aggregation {mode!r}")
    res = activation(agg + bias, act)
    return (res, coef) if return_attention else res


def dropout(x: Tensor, rate: float = 0.2, training: bool = True, rng=None) -> Tensor:
    """Inverted dropout; identity at inference or when ``rate`` is 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if not training or rate == 0.0:
        return x
    rng = np.random.default_rng() if rng is None else rng
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep


def nll_loss(logits: Tensor, labels, reduction: str = "mean") -> Tensor:
    """Negative log-likelihood of ``labels`` under softmax(``logits``) (B x C)."""
    labels = np.asarray(labels, dtype=np.int64)
    logp = logits.log_softmax(axis=-1)
    picked = logp[np.arange(len(labels)), labels]
    if reduction == "mean":
        return -picked.mean()
    if reduction == "sum":
        return -picked.sum()
    raise ValueError(f"unknown reduction {reduction!r}")


def linear(x, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    x = as_tensor(x)
    _check_linear(x, weight)
    out = x @ weight.T
    return out if bias is None else out + bias


def conv1d(x, weight: Tensor, bias: Tensor, stride: int = 1) -> Tensor:
    """1-D convolution over (B, L, C) inputs with kernel ``weight`` (C_out, C, K).

    Returns (B, L_out, C_out) with L_out = (L - K) // stride + 1.
    """
    x = as_tensor(x)
    c_out, c_in, k = weight.shape
    if x.shape[-1] != c_in:
        raise ShapeError(f"conv expects {c_in} channels, got {x.shape[-1]}")
    length = x.shape[-2]
    if length < k:
        raise ShapeError("input shorter than kernel")
    l_out = (length - k) // stride + 1
    idx = np.arange(l_out)[:, None] * stride + np.arange(k)[None, :]
    cols = x[:, idx, :].reshape(x.shape[0], l_out, k * c_in)       # (B, L_out, K*C)
    kernel = weight.transpose(0, 2, 1).reshape(c_out, k * c_in)    # matches (k, c) order
    return cols @ kernel.T + bias
