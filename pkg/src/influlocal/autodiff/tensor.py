"""Dense tensors with reverse-mode differentiation.

Every op records its parents and a closure that pushes the output gradient
back to them.  Broadcasting follows numpy; gradients are summed back to each
operand's shape.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, _parents=(), op: str = ""):
        data = np.asarray(data)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = None
        self.op = op

    shape = property(lambda self: self.data.shape)
    ndim = property(lambda self: self.data.ndim)
    dtype = property(lambda self: self.data.dtype)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def _make(self, data, parents, op, backward):
        needs = any(p.requires_grad for p in parents)
        out = Tensor(data, needs, parents if needs else (), op)
        if needs:
            out._backward = backward
        return out

    def _acc(self, g):
        if not self.requires_grad:
            return
        g = _unbroadcast(g, self.shape)
        if self.grad is None:
            self.grad = np.array(g, dtype=self.dtype, copy=True)
        else:
            self.grad += g

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._acc(np.asarray(grad, dtype=self.dtype))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                if node._parents:
                    node.grad = None  # intermediate buffer no longer needed

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # arithmetic

    def __add__(self, other):
        other = as_tensor(other, self.dtype)

        def bw(g):
            self._acc(g)
            other._acc(g)
        return self._make(self.data + other.data, (self, other), "add", bw)

    __radd__ = __add__

    def __neg__(self):
        return self._make(-self.data, (self,), "neg", lambda g: self._acc(-g))

    def __sub__(self, other):
        return self + (-as_tensor(other, self.dtype))

    def __rsub__(self, other):
        return as_tensor(other, self.dtype) + (-self)

    def __mul__(self, other):
        other = as_tensor(other, self.dtype)

        def bw(g):
            self._acc(g * other.data)
            other._acc(g * self.data)
        return self._make(self.data * other.data, (self, other), "mul", bw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other, self.dtype)
        out_data = self.data / other.data

        def bw(g):
            self._acc(g / other.data)
            other._acc(-g * out_data / other.data)
        return self._make(out_data, (self, other), "div", bw)

    def __pow__(self, k: float):
        if isinstance(k, Tensor):
            raise TypeError("only constant exponents are supported")

        def bw(g):
            self._acc(g * k * self.data ** (k - 1))
        return self._make(self.data ** k, (self,), f"pow{k}", bw)

    def __matmul__(self, other):
        other = as_tensor(other, self.dtype)
        if self.ndim < 2 or other.ndim < 2:
            raise ValueError("matmul operands must be at least 2-D")

        def bw(g):
            if self.requires_grad:
                self._acc(g @ np.swapaxes(other.data, -1, -2))
            if other.requires_grad:
                other._acc(np.swapaxes(self.data, -1, -2) @ g)
        return self._make(self.data @ other.data, (self, other), "matmul", bw)

    # reductions and shape ops

    def sum(self, axis=None, keepdims: bool = False):
        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._acc(np.broadcast_to(g, self.shape))
        return self._make(self.data.sum(axis=axis, keepdims=keepdims), (self,), "sum", bw)

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else np.prod(
            [self.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis, keepdims) * (1.0 / count)

    def reshape(self, *shape):
        shape = shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape
        return self._make(self.data.reshape(shape), (self,), "reshape",
                          lambda g: self._acc(g.reshape(self.shape)))

    def transpose(self, *axes):
        axes = axes[0] if len(axes) == 1 and isinstance(axes[0], (tuple, list)) else axes
        axes = tuple(axes) if axes else tuple(reversed(range(self.ndim)))
        inv = np.argsort(axes)
        return self._make(self.data.transpose(axes), (self,), "transpose",
                          lambda g: self._acc(g.transpose(inv)))

    def swapaxes(self, a: int, b: int):
        return self._make(np.swapaxes(self.data, a, b), (self,), "swapaxes",
                          lambda g: self._acc(np.swapaxes(g, a, b)))

    @property
    def T(self):
        return self.swapaxes(-1, -2)

    def __getitem__(self, idx):
        def bw(g):
            full = np.zeros_like(self.data)
            np.add.at(full, idx, g)
            self._acc(full)
        return self._make(self.data[idx], (self,), "getitem", bw)

    # elementwise functions

    def exp(self):
        out = np.exp(self.data)
        return self._make(out, (self,), "exp", lambda g: self._acc(g * out))

    def log(self):
        return self._make(np.log(self.data), (self,), "log", lambda g: self._acc(g / self.data))

    def sqrt(self):
        out = np.sqrt(self.data)
        return self._make(out, (self,), "sqrt", lambda g: self._acc(g * 0.5 / out))

    def elu(self, alpha: float = 1.0):
        pos = self.data > 0
        neg_part = alpha * np.expm1(np.minimum(self.data, 0))
        out = np.where(pos, self.data, neg_part)
        return self._make(out, (self,), "elu",
                          lambda g: self._acc(g * np.where(pos, 1.0, neg_part + alpha)))

    def leaky_relu(self, slope: float = 0.2):
        pos = self.data > 0
        return self._make(np.where(pos, self.data, slope * self.data), (self,), "leaky_relu",
                          lambda g: self._acc(np.where(pos, g, slope * g)))

    def masked_softmax(self, mask, axis: int = -1):
        """Softmax over entries where ``mask`` is true; masked entries are 0."""
        mask = np.asarray(mask, dtype=bool)
        if not np.all(mask.any(axis=axis)):
            raise ValueError("softmax row with empty support")
        x = np.where(mask, self.data, -np.inf)
        x -= x.max(axis=axis, keepdims=True)
        out = np.exp(x, out=x)
        out /= out.sum(axis=axis, keepdims=True)

        def bw(g):
            go = g * out
            go -= out * go.sum(axis=axis, keepdims=True)
            self._acc(go)
        return self._make(out.astype(self.dtype, copy=False), (self,), "softmax", bw)

    def softmax(self, axis: int = -1):
        return self.masked_softmax(np.ones(self.shape, dtype=bool), axis)

    def log_softmax(self, axis: int = -1):
        x = self.data - self.data.max(axis=axis, keepdims=True)
        lse = np.log(np.exp(x).sum(axis=axis, keepdims=True))
        out = x - lse
        sm = np.exp(out)

        def bw(g):
            self._acc(g - sm * g.sum(axis=axis, keepdims=True))
        return self._make(out, (self,), "log_softmax", bw)


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def bw(g):
        for t, part in zip(tensors, np.split(g, sizes, axis=axis)):
            t._acc(part)
    return tensors[0]._make(np.concatenate([t.data for t in tensors], axis=axis),
                            tuple(tensors), "concat", bw)


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]

    def bw(g):
        for i, t in enumerate(tensors):
            t._acc(np.take(g, i, axis=axis))
    return tensors[0]._make(np.stack([t.data for t in tensors], axis=axis),
                            tuple(tensors), "stack", bw)
