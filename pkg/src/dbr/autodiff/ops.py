"""Elementwise, reduction and shape primitives."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, unbroadcast

DIV_GUARD = 1e-12


def _pair(a, b):
    """Promote a mixed pair of operands to tensors of a common dtype."""
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        return a, b
    if isinstance(a, Tensor):
        return a, Tensor(np.asarray(b, dtype=a.dtype))
    if isinstance(b, Tensor):
        return Tensor(np.asarray(a, dtype=b.dtype)), b
    return Tensor(a), Tensor(b)


def _unary(x):
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# arithmetic

def add(a, b):
    a, b = _pair(a, b)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return Tensor.node(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = _pair(a, b)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return Tensor.node(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    a, b = _pair(a, b)

    def backward(g):
        ga = unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return Tensor.node(a.data * b.data, (a, b), backward, "mul")


def div(a, b, floor=None):
    """Elementwise ``a / b``.

    Raises when any ``|b| < 1e-12`` unless ``floor`` is given, in which case
    the denominator is replaced by ``max(b, floor)`` (no gradient flows
    through floored entries).
    """
    a, b = _pair(a, b)
    den = b.data
    mask = None
    if floor is not None:
        mask = den < floor
        den = np.where(mask, np.asarray(floor, dtype=den.dtype), den)
    elif np.any(np.abs(den) < DIV_GUARD):
        raise ZeroDivisionError("denominator magnitude below 1e-12; pass floor= to guard")
    out = a.data / den

    def backward(g):
        ga = unbroadcast(g / den, a.shape) if a.requires_grad else None
        gb = None
        if b.requires_grad:
            gb = -g * out / den
            if mask is not None:
                gb = np.where(mask, 0, gb)
            gb = unbroadcast(gb, b.shape)
        return ga, gb

    return Tensor.node(out, (a, b), backward, "div")


def neg(x):
    x = _unary(x)
    return Tensor.node(-x.data, (x,), lambda g: (-g,), "neg")


def power(x, exponent):
    x = _unary(x)
    p = float(exponent)
    out = x.data ** p

    def backward(g):
        return (g * p * x.data ** (p - 1),)

    return Tensor.node(out, (x,), backward, "pow")


def exp(x):
    x = _unary(x)
    out = np.exp(x.data)
    return Tensor.node(out, (x,), lambda g: (g * out,), "exp")


def log(x):
    x = _unary(x)
    return Tensor.node(np.log(x.data), (x,), lambda g: (g / x.data,), "log")


def sqrt(x):
    x = _unary(x)
    out = np.sqrt(x.data)
    return Tensor.node(out, (x,), lambda g: (g * 0.5 / out,), "sqrt")


def abs(x):  # noqa: A001 - mirrors numpy naming
    """Absolute value; the subgradient at 0 is 0."""
    x = _unary(x)
    return Tensor.node(np.abs(x.data), (x,), lambda g: (g * np.sign(x.data),), "abs")


def square(x):
    x = _unary(x)
    return Tensor.node(x.data * x.data, (x,), lambda g: (2 * g * x.data,), "square")


# ---------------------------------------------------------------------------
# nonlinearities

def sigmoid(x):
    x = _unary(x)
    out = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return Tensor.node(out, (x,), lambda g: (g * out * (1 - out),), "sigmoid")


def relu(x):
    x = _unary(x)
    mask = x.data > 0
    return Tensor.node(np.where(mask, x.data, 0), (x,), lambda g: (g * mask,), "relu")


def clamp(x, lo=None, hi=None):
    """Clip to ``[lo, hi]``; bounds are constants (arrays allowed).

    The gradient passes where ``lo <= x <= hi`` and is zero elsewhere.
    """
    x = _unary(x)
    lo_arr = None if lo is None else np.asarray(lo.data if isinstance(lo, Tensor) else lo, dtype=x.dtype)
    hi_arr = None if hi is None else np.asarray(hi.data if isinstance(hi, Tensor) else hi, dtype=x.dtype)
    out = x.data
    mask = np.ones(x.shape, dtype=bool)
    if lo_arr is not None:
        mask = mask & (x.data >= lo_arr)
        out = np.maximum(out, lo_arr)
    if hi_arr is not None:
        mask = mask & (x.data <= hi_arr)
        out = np.minimum(out, hi_arr)
    out = np.broadcast_to(out, x.shape).copy() if out.shape != x.shape else out

    def backward(g):
        return (g * mask,)

    return Tensor.node(out, (x,), backward, "clamp")


def softmax(x, axis=-1):
    x = _unary(x)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor.node(out, (x,), backward, "softmax")


# ---------------------------------------------------------------------------
# reductions

def reduce_sum(x, axis=None, keepdims=False):
    x = _unary(x)
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return Tensor.node(out, (x,), backward, "sum")


def reduce_mean(x, axis=None, keepdims=False):
    x = _unary(x)
    out = np.mean(x.data, axis=axis, keepdims=keepdims)
    count = x.data.size // max(out.size, 1) if axis is not None else x.data.size

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, x.shape).copy(),)

    return Tensor.node(out, (x,), backward, "mean")


def l1(x):
    """Sum of absolute values."""
    return reduce_sum(abs(x))


# ---------------------------------------------------------------------------
# shape manipulation

def reshape(x, shape):
    x = _unary(x)
    return Tensor.node(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),), "reshape")


def transpose(x, axes=None):
    x = _unary(x)
    inverse = None if axes is None else tuple(np.argsort(axes))
    return Tensor.node(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),), "transpose")


def getitem(x, index):
    x = _unary(x)

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g) if _is_fancy(index) else full.__setitem__(index, g)
        return (full,)

    return Tensor.node(x.data[index], (x,), backward, "getitem")


def _is_fancy(index):
    parts = index if isinstance(index, tuple) else (index,)
    return any(isinstance(p, (list, np.ndarray)) for p in parts)


def concat(tensors, axis=0):
    tensors = [_unary(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        return tuple(np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(tensors)))

    return Tensor.node(out, tuple(tensors), backward, "concat")


def stack(tensors, axis=0):
    tensors = [_unary(t) for t in tensors]
    out = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return Tensor.node(out, tuple(tensors), backward, "stack")


# ---------------------------------------------------------------------------
# linear algebra

def matmul(a, b):
    a, b = _pair(a, b)

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2) if a.requires_grad else None
        gb = np.swapaxes(a.data, -1, -2) @ g if b.requires_grad else None
        return ga, gb

    return Tensor.node(a.data @ b.data, (a, b), backward, "matmul")


def pixel_matvec(m, v):
    """Batched matrix-vector product over leading dims: ``m[..., i, j] v[..., j]``."""
    m, v = _pair(m, v)
    out = np.einsum("...ij,...j->...i", m.data, v.data)

    def backward(g):
        gm = g[..., :, None] * v.data[..., None, :] if m.requires_grad else None
        gv = np.einsum("...ij,...i->...j", m.data, g) if v.requires_grad else None
        return gm, gv

    return Tensor.node(out, (m, v), backward, "pixel_matvec")
