"""Glorot initialization and Adagrad."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def glorot_init(fan_in: int, fan_out: int, seed=None, shape=None, dtype=np.float64) -> np.ndarray:
    """Uniform on +-sqrt(6 / (fan_in + fan_out)); shape defaults to (fan_out, fan_in)."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fan sizes must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape or (fan_out, fan_in)).astype(dtype)


@dataclass
class AdagradState:
    sums: dict = field(default_factory=dict)
    steps: int = 0


def adagrad_step(params: dict, grads: dict, state: AdagradState, lr: float,
                 weight_decay: float = 0.0, eps: float = 1e-10, decay_mask=None) -> None:
    """In-place Adagrad update of the numpy arrays in ``params``.

    ``decay_mask`` maps names to whether weight decay applies (default: all).
    Missing gradients are treated as zero.
    """
    for name, p in params.items():
        g = grads.get(name)
        g = np.zeros_like(p) if g is None else g
        if weight_decay and (decay_mask is None or decay_mask.get(name, True)):
            g = g + weight_decay * p
        acc = state.sums.get(name)
        if acc is None:
            acc = state.sums[name] = np.zeros_like(p)
        acc += g * g
        p -= lr * g / (np.sqrt(acc) + eps)
    state.steps += 1


class Adagrad:
    def __init__(self, params: dict, lr: float = 0.1, weight_decay: float = 0.0,
                 eps: float = 1e-10, decay_mask=None):
        self.params = params
        self.lr, self.weight_decay, self.eps = lr, weight_decay, eps
        self.decay_mask = decay_mask
        self.state = AdagradState()

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def step(self):
        adagrad_step({k: t.data for k, t in self.params.items()},
                     {k: t.grad for k, t in self.params.items()},
                     self.state, self.lr, self.weight_decay, self.eps, self.decay_mask)
