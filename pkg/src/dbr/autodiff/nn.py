"""Network layers: convolution, fully-connected, bilinear resize."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .ops import _pair, _unary, add, matmul
from .tensor import Tensor


def _conv_pad(kh, kw, padding):
    if padding == "same":
        return kh // 2, kw // 2
    if padding == "valid":
        return 0, 0
    raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")


def conv2d(x, weight, bias=None, stride=1, padding="same"):
    """Cross-correlation of an N×C×H×W input with an F×C×kh×kw kernel."""
    x, weight = _pair(x, weight)
    n, c, h, w = x.shape
    f, wc, kh, kw = weight.shape
    if wc != c:
        raise ValueError(f"channel mismatch: input has {c}, kernel expects {wc}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("kernel sizes must be odd")
    ph, pw = _conv_pad(kh, kw, padding)
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    # windows: N×C×Ho×Wo×kh×kw
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = win.shape[2], win.shape[3]
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n * ho * wo, c * kh * kw)
    wmat = weight.data.reshape(f, c * kh * kw)
    out = (cols @ wmat.T).reshape(n, ho, wo, f).transpose(0, 3, 1, 2)

    def backward(g):
        gmat = g.transpose(0, 2, 3, 1).reshape(n * ho * wo, f)
        gw = (gmat.T @ cols).reshape(weight.shape) if weight.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = (gmat @ wmat).reshape(n, ho, wo, c, kh, kw)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += gcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            gx = gxp[:, :, ph:ph + h, pw:pw + w]
        return gx, gw

    y = Tensor.node(np.ascontiguousarray(out), (x, weight), backward, "conv2d")
    if bias is not None:
        bias = bias if isinstance(bias, Tensor) else Tensor(np.asarray(bias, dtype=x.dtype))
        y = add(y, bias.reshape((1, f, 1, 1)))
    return y


def fully_connected(x, weight, bias=None):
    """``x @ weight + bias`` for an N×D input and a D×M weight."""
    y = matmul(x, weight)
    if bias is not None:
        y = add(y, bias)
    return y


def resize_matrix(n_out, n_in, dtype=np.float64):
    """Row-stochastic bilinear interpolation matrix (half-pixel centres)."""
    m = np.zeros((n_out, n_in), dtype=dtype)
    if n_in == 1:
        m[:, 0] = 1
        return m
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0, n_in - 1)
    i0 = np.minimum(np.floor(src).astype(int), n_in - 2)
    frac = src - i0
    rows = np.arange(n_out)
    m[rows, i0] += 1 - frac
    m[rows, i0 + 1] += frac
    return m


def resize_bilinear(img, out_h, out_w):
    """Bilinear resize of an H×W×C image (tensor or array)."""
    img = _unary(img)
    h, w = img.shape[0], img.shape[1]
    ry = resize_matrix(out_h, h, img.dtype)
    rx = resize_matrix(out_w, w, img.dtype)
    out = np.einsum("ah,hwc,bw->abc", ry, img.data, rx, optimize=True)

    def backward(g):
        return (np.einsum("ah,abc,bw->hwc", ry, g, rx, optimize=True),)

    return Tensor.node(out, (img,), backward, "resize")
