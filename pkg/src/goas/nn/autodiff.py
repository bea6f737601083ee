"""Minimal reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray plus an optional backward closure. Ops build the
graph only while gradient recording is enabled and at least one input
requires grad; otherwise they return detached tensors, so inference inside
no_grad() costs nothing extra. Convolution and pooling dispatch to the
selected kernel backend (see goas.nn.backend).

Backward closures return one gradient per parent, or None for parents whose
gradient is not needed; expensive partials (e.g. conv weight gradients for a
frozen layer) are skipped by checking requires_grad at call time.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from goas.nn import backend as K

_grad_enabled = True


@contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.ndim != 0:
            raise ValueError("backward() requires a scalar tensor")
        order = _toposort(self)
        self.grad = np.ones((), dtype=self.data.dtype)
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            grads = node._backward(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


def _toposort(root: Tensor) -> list[Tensor]:
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _make(data: np.ndarray, parents: tuple, backward) -> Tensor:
    if _grad_enabled and any(p.requires_grad for p in parents):
        out = Tensor(data, requires_grad=True)
        out._parents = parents
        out._backward = backward
        return out
    return Tensor(data)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------- arithmetic


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data + b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g, a.data.shape) if a.requires_grad else None,
            _unbroadcast(g, b.data.shape) if b.requires_grad else None,
        ),
    )


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape) if a.requires_grad else None,
            _unbroadcast(g * a.data, b.data.shape) if b.requires_grad else None,
        ),
    )


def affine(a, scale: float = 1.0, shift: float = 0.0):
    a = as_tensor(a)
    return _make(a.data * scale + shift, (a,), lambda g: (g * scale,))


def neg(a):
    return affine(a, -1.0)


def sub(a, b):
    return add(a, neg(b))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.data @ b.data,
        (a, b),
        lambda g: (
            g @ b.data.T if a.requires_grad else None,
            a.data.T @ g if b.requires_grad else None,
        ),
    )


# ------------------------------------------------------------ shape plumbing


def reshape(a, shape):
    a = as_tensor(a)
    old = a.data.shape
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def concat(tensors, axis: int = -1):
    ts = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        parts = np.split(g, splits, axis=axis)
        return tuple(p if t.requires_grad else None for p, t in zip(parts, ts))

    return _make(np.concatenate([t.data for t in ts], axis=axis), tuple(ts), backward)


def take_column(a, j: int):
    a = as_tensor(a)

    def backward(g):
        da = np.zeros_like(a.data)
        da[:, j] = g
        return (da,)

    return _make(a.data[:, j].copy(), (a,), backward)


# ------------------------------------------------------------- nonlinearities


def leaky_relu(a, slope: float = 0.2):
    a = as_tensor(a)
    pos = a.data > 0
    out = np.where(pos, a.data, slope * a.data)
    return _make(out, (a,), lambda g: (np.where(pos, g, slope * g),))


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a):
    a = as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),))


def clip01(a):
    """Clamp to [0,1]; gradient passes inside the (inclusive) interval."""
    a = as_tensor(a)
    mask = (a.data >= 0.0) & (a.data <= 1.0)
    return _make(np.clip(a.data, 0.0, 1.0), (a,), lambda g: (g * mask,))


def clip_probs(a, eps: float):
    """Clamp to [eps, 1-eps]; gradient is zero where the clamp is active."""
    a = as_tensor(a)
    mask = (a.data > eps) & (a.data < 1.0 - eps)
    return _make(np.clip(a.data, eps, 1.0 - eps), (a,), lambda g: (g * mask,))


def log(a):
    a = as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def softmax(a):
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)

    return _make(p, (a,), backward)


def instance_norm(a, eps: float = 1e-5):
    """Normalize each (sample, channel) plane over its spatial extent."""
    a = as_tensor(a)
    mu = a.data.mean(axis=(1, 2), keepdims=True)
    var = a.data.var(axis=(1, 2), keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv

    def backward(g):
        m = g.mean(axis=(1, 2), keepdims=True)
        mx = (g * xhat).mean(axis=(1, 2), keepdims=True)
        return (inv * (g - m - xhat * mx),)

    return _make(xhat, (a,), backward)


# ------------------------------------------------------------------ reductions


def mean(a):
    a = as_tensor(a)
    n = a.data.size
    return _make(
        np.asarray(a.data.mean(), dtype=a.data.dtype),
        (a,),
        lambda g: (np.full(a.data.shape, g / n, dtype=a.data.dtype),),
    )


def sum_axis(a, axis: int):
    a = as_tensor(a)
    return _make(
        a.data.sum(axis=axis),
        (a,),
        lambda g: (np.repeat(np.expand_dims(g, axis), a.data.shape[axis], axis=axis),),
    )


def mean_hw(a):
    """Global average pool over the spatial axes of an NHWC tensor."""
    a = as_tensor(a)
    b, h, w, c = a.data.shape
    return _make(
        a.data.mean(axis=(1, 2)),
        (a,),
        lambda g: (np.broadcast_to(g[:, None, None, :] / (h * w), (b, h, w, c)).astype(a.data.dtype, copy=True),),
    )


# ----------------------------------------------------------- conv and pooling


def conv2d(x, w, stride: int = 1, pad: int = 1):
    x, w = as_tensor(x), as_tensor(w)
    y = K.conv2d_forward(x.data, w.data, stride, pad)

    def backward(g):
        dx = K.conv2d_backward_input(g, w.data, x.data.shape, stride, pad) if x.requires_grad else None
        dw = K.conv2d_backward_weight(g, x.data, w.data.shape, stride, pad) if w.requires_grad else None
        return dx, dw

    return _make(y, (x, w), backward)


def dwconv2d(x, w, stride: int = 1, pad: int = 1):
    x, w = as_tensor(x), as_tensor(w)
    y = K.dwconv2d_forward(x.data, w.data, stride, pad)

    def backward(g):
        dx = K.dwconv2d_backward_input(g, w.data, x.data.shape, stride, pad) if x.requires_grad else None
        dw = K.dwconv2d_backward_weight(g, x.data, w.data.shape, stride, pad) if w.requires_grad else None
        return dx, dw

    return _make(y, (x, w), backward)


def maxpool2(x):
    x = as_tensor(x)
    y, idx = K.maxpool2_forward(x.data)
    return _make(y, (x,), lambda g: (K.maxpool2_backward(g, idx, x.data.shape),))
