"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

Design:
  * Every operation validates its output and raises NumericError on NaN/Inf,
    so a diverging training run fails at the op that produced the bad value.
  * Gradients are recorded on an explicit Tape. Ops executed outside any
    active tape (inference) compute values only.
  * A tape supports one backward pass; call reset() to reuse it.

Only the operators the forecasting model needs are implemented — this is a
training core, not a framework.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, ShapeMismatchError
from . import kernels

_TAPE_STACK: list = []


class Tape:
    """Ordered record of executed ops, walked in reverse by backward()."""

    def __init__(self):
        self._nodes = []
        self._consumed = False

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _TAPE_STACK.pop()
        assert popped is self
        return False

    def __len__(self):
        return len(self._nodes)

    def backward(self, loss: "Tensor"):
        """Populate .grad on every tracked tensor reachable from loss."""
        if self._consumed:
            raise NumericError("tape already consumed by a backward pass; call reset() first")
        if loss.values.ndim != 0:
            raise NumericError(f"backward needs a scalar loss, got shape {loss.values.shape}")
        self._consumed = True
        loss.grad = np.ones((), dtype=np.float64)
        for node in reversed(self._nodes):
            out_grad = node.out.grad
            if out_grad is None:
                continue
            for tensor, grad in zip(node.inputs, node.backward_fn(out_grad)):
                if grad is None or not tensor._track:
                    continue
                tensor.grad = grad if tensor.grad is None else tensor.grad + grad

    def reset(self):
        self._nodes.clear()
        self._consumed = False


class _Node:
    __slots__ = ("out", "inputs", "backward_fn")

    def __init__(self, out, inputs, backward_fn):
        self.out = out
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tensor:
    """A float64 array plus (after backward) its gradient."""

    __slots__ = ("values", "grad", "requires_grad", "_track")

    def __init__(self, values, requires_grad=False):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._track = self.requires_grad

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    def item(self) -> float:
        return float(self.values)

    def __repr__(self):
        return f"Tensor(shape={self.values.shape}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(values) -> Tensor:
    return Tensor(np.array(values, dtype=np.float64), requires_grad=True)


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _finite(values, op):
    if not np.all(np.isfinite(values)):
        raise NumericError(f"{op} produced a non-finite value")
    return values


def _make(values, inputs, backward_fn, op):
    out = Tensor(_finite(values, op))
    tape = _active_tape()
    if tape is not None and any(t._track for t in inputs):
        out._track = True
        tape._nodes.append(_Node(out, inputs, backward_fn))
    return out


def _unbroadcast(grad, shape):
    """Reduce a broadcast gradient back to the given input shape."""
    shape = tuple(shape)
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise arithmetic

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.values + b.values,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.values - b.values,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.values * b.values,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.values, a.shape),
            _unbroadcast(g * a.values, b.shape),
        ),
        "mul",
    )


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        a.values / b.values,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.values, a.shape),
            _unbroadcast(-g * a.values / (b.values * b.values), b.shape),
        ),
        "div",
    )


def neg(a):
    a = as_tensor(a)
    return _make(-a.values, (a,), lambda g: (-g,), "neg")


def pow_scalar(a, p: float):
    """Elementwise a**p for a fixed float exponent."""
    a = as_tensor(a)
    out = a.values**p
    return _make(out, (a,), lambda g: (g * p * a.values ** (p - 1.0),), "pow")


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.values)
    return _make(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    a = as_tensor(a)
    return _make(np.log(a.values), (a,), lambda g: (g / a.values,), "log")


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.values)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def sigmoid(a):
    a = as_tensor(a)
    x = a.values
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def relu(a):
    a = as_tensor(a)
    mask = a.values > 0
    return _make(np.where(mask, a.values, 0.0), (a,), lambda g: (g * mask,), "relu")


def prelu(a, slope: Tensor):
    """PReLU with a learnable scalar slope: x if x > 0 else slope * x."""
    a = as_tensor(a)
    if slope.values.ndim != 0:
        raise ShapeMismatchError("prelu slope", slope.shape, ())
    mask = a.values > 0
    out = np.where(mask, a.values, slope.values * a.values)

    def backward(g):
        ga = g * np.where(mask, 1.0, slope.values)
        gs = np.sum(g * np.where(mask, 0.0, a.values))
        return ga, np.asarray(gs)

    return _make(out, (a, slope), backward, "prelu")


# ---------------------------------------------------------------------------
# shape ops

def reshape(a, shape):
    a = as_tensor(a)
    shape = tuple(shape)
    return _make(a.values.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes):
    a = as_tensor(a)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _make(
        np.ascontiguousarray(a.values.transpose(axes)),
        (a,),
        lambda g: (g.transpose(inv),),
        "transpose",
    )


def broadcast_to(a, shape):
    a = as_tensor(a)
    shape = tuple(shape)
    return _make(
        np.ascontiguousarray(np.broadcast_to(a.values, shape)),
        (a,),
        lambda g: (_unbroadcast(g, a.shape),),
        "broadcast_to",
    )


def concat(tensors, axis: int):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _make(
        np.concatenate([t.values for t in tensors], axis=axis), tuple(tensors), backward, "concat"
    )


def narrow(a, axis: int, start: int, length: int):
    """Contiguous slice [start, start+length) along one axis."""
    a = as_tensor(a)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)

    def backward(g):
        gx = np.zeros(a.shape)
        gx[idx] = g
        return (gx,)

    return _make(np.ascontiguousarray(a.values[idx]), (a,), backward, "narrow")


# ---------------------------------------------------------------------------
# reductions and contractions

def tensor_sum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.values.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        g_exp = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g_exp, a.shape).copy(),)

    return _make(out, (a,), backward, "sum")


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    if axis is None:
        n = a.values.size
    elif isinstance(axis, tuple):
        n = int(np.prod([a.shape[ax] for ax in axis]))
    else:
        n = a.shape[axis]
    return mul(tensor_sum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)

    def backward(g):
        ga = np.matmul(g, b.values.swapaxes(-1, -2))
        gb = np.matmul(a.values.swapaxes(-1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(np.matmul(a.values, b.values), (a, b), backward, "matmul")


# ---------------------------------------------------------------------------
# network layers

def conv1d_temporal(x, w):
    """Same-padded stride-1 convolution over the last (time) axis.

    x: (B, Cin, T), w: (Cout, Cin, K) -> (B, Cout, T)
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ShapeMismatchError("conv1d", x.shape, w.shape)
    xv = np.ascontiguousarray(x.values)
    wv = np.ascontiguousarray(w.values)
    K = wv.shape[2]

    def backward(g):
        g = np.ascontiguousarray(g)
        return (
            kernels.conv1d_backward_input(g, wv),
            kernels.conv1d_backward_weight(xv, g, K),
        )

    return _make(kernels.conv1d_forward(xv, wv), (x, w), backward, "conv1d")


def conv2d(x, w):
    """Same-padded stride-1 convolution over the last two axes.

    x: (B, Cin, H, W), w: (Cout, Cin, KH, KW) -> (B, Cout, H, W)
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ShapeMismatchError("conv2d", x.shape, w.shape)
    xv = np.ascontiguousarray(x.values)
    wv = np.ascontiguousarray(w.values)
    KH, KW = wv.shape[2], wv.shape[3]

    def backward(g):
        g = np.ascontiguousarray(g)
        return (
            kernels.conv2d_backward_input(g, wv),
            kernels.conv2d_backward_weight(xv, g, KH, KW),
        )

    return _make(kernels.conv2d_forward(xv, wv), (x, w), backward, "conv2d")


class BatchNormState:
    """Running statistics buffers for one batch-norm site."""

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.momentum = momentum
        self.eps = eps


def batch_norm(x, gamma, beta, state: BatchNormState, training: bool):
    """Normalize over every axis except channel axis 1.

    Training mode uses batch statistics and updates the running buffers;
    inference mode uses the stored running statistics.
    """
    x = as_tensor(x)
    C = x.shape[1]
    if gamma.shape != (C,) or beta.shape != (C,):
        raise ShapeMismatchError("batch_norm", x.shape, gamma.shape)
    axes = tuple(i for i in range(x.ndim) if i != 1)
    param_shape = tuple(C if i == 1 else 1 for i in range(x.ndim))
    gv = gamma.values.reshape(param_shape)
    bv = beta.values.reshape(param_shape)

    if training:
        mu = x.values.mean(axis=axes, keepdims=True)
        var = x.values.var(axis=axes, keepdims=True)
        n = x.values.size // C
        state.running_mean = (
            (1.0 - state.momentum) * state.running_mean + state.momentum * mu.reshape(C)
        )
        state.running_var = (
            (1.0 - state.momentum) * state.running_var + state.momentum * var.reshape(C)
        )
        inv_std = 1.0 / np.sqrt(var + state.eps)
        xhat = (x.values - mu) * inv_std
        out = gv * xhat + bv

        def backward(g):
            ggamma = (g * xhat).sum(axis=axes)
            gbeta = g.sum(axis=axes)
            gxhat = g * gv
            # standard batch-norm backward, reduced over the batch axes
            gx = (
                inv_std
                / n
                * (
                    n * gxhat
                    - gxhat.sum(axis=axes, keepdims=True)
                    - xhat * (gxhat * xhat).sum(axis=axes, keepdims=True)
                )
            )
            return gx, ggamma, gbeta

        return _make(out, (x, gamma, beta), backward, "batch_norm")

    inv_std = 1.0 / np.sqrt(state.running_var.reshape(param_shape) + state.eps)
    xhat = (x.values - state.running_mean.reshape(param_shape)) * inv_std
    out = gv * xhat + bv

    def backward_eval(g):
        ggamma = (g * xhat).sum(axis=axes)
        gbeta = g.sum(axis=axes)
        gx = g * gv * inv_std
        return gx, ggamma, gbeta

    return _make(out, (x, gamma, beta), backward_eval, "batch_norm")


def dropout(x, rate: float, rng, training: bool):
    """Inverted dropout; the identity in inference mode."""
    if not training or rate == 0.0:
        return x
    x = as_tensor(x)
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _make(x.values * mask, (x,), lambda g: (g * mask,), "dropout")


def linear(x, w, b=None):
    """x @ w (+ b); w is (in_features, out_features), b is (out_features,)."""
    out = matmul(x, w)
    if b is not None:
        out = add(out, b)
    return out


def uniform_init(shape, fan_in: int, rng) -> np.ndarray:
    """Uniform in +-sqrt(1/fan_in)."""
    bound = float(np.sqrt(1.0 / max(fan_in, 1)))
    return rng.uniform(-bound, bound, size=shape)
