"""Image-space primitives operating on the trailing H×W×C axes."""

from __future__ import annotations

import numpy as np

from .ops import _unary
from .tensor import Tensor

ROW_AXIS = -3
COL_AXIS = -2


def _forward_diff(x, axis):
    x = _unary(x)
    n = x.shape[axis]
    out = np.zeros_like(x.data)
    head = [slice(None)] * x.ndim
    tail = [slice(None)] * x.ndim
    head[axis] = slice(0, n - 1)
    tail[axis] = slice(1, n)
    head, tail = tuple(head), tuple(tail)
    out[head] = x.data[tail] - x.data[head]

    def backward(g):
        gx = np.zeros_like(g)
        gh = g[head]
        gx[tail] += gh
        gx[head] -= gh
        return (gx,)

    return Tensor.node(out, (x,), backward, "diff")


def spatial_grad(x):
    """Forward differences ``(gx, gy)`` of an H×W×C image.

    ``gx`` differences along columns, ``gy`` along rows; the last column
    (respectively row) is zero.
    """
    return _forward_diff(x, COL_AXIS), _forward_diff(x, ROW_AXIS)


def gaussian_taps(sigma, radius, dtype=np.float64):
    """Normalized 1-D Gaussian taps on ``[-radius, radius]``."""
    if sigma < 0.1:
        raise ValueError(f"sigma must be >= 0.1, got {sigma}")
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(t * t) / (2 * sigma * sigma))
    return (k / k.sum()).astype(dtype)


def _blur_axis(x, taps, axis):
    x = _unary(x)
    r = len(taps) // 2
    n = x.shape[axis]
    pad = [(0, 0)] * x.ndim
    pad[axis] = (r, r)
    xp = np.pad(x.data, pad, mode="edge")
    out = np.zeros_like(x.data)
    for t, wt in enumerate(taps):
        out += wt * np.take(xp, np.arange(t, t + n), axis=axis)

    def backward(g):
        gp = np.zeros_like(xp)
        for t, wt in enumerate(taps):
            idx = [slice(None)] * x.ndim
            idx[axis] = slice(t, t + n)
            gp[tuple(idx)] += wt * g
        gx = np.take(gp, np.arange(r, r + n), axis=axis).copy()
        if r:
            first = [slice(None)] * x.ndim
            last = [slice(None)] * x.ndim
            first[axis] = slice(0, 1)
            last[axis] = slice(n - 1, n)
            gx[tuple(first)] += np.take(gp, np.arange(0, r), axis=axis).sum(axis=axis, keepdims=True)
            gx[tuple(last)] += np.take(gp, np.arange(r + n, 2 * r + n), axis=axis).sum(axis=axis, keepdims=True)
        return (gx,)

    return Tensor.node(out, (x,), backward, "blur")


def gaussian_blur(x, sigma=1.0, radius=2):
    """Truncated, renormalized 2-D Gaussian blur with replicate padding.

    The square-support 2-D kernel factorizes exactly into two normalized
    1-D passes.
    """
    x = _unary(x)
    taps = gaussian_taps(sigma, radius, x.dtype)
    return _blur_axis(_blur_axis(x, taps, ROW_AXIS), taps, COL_AXIS)


def _corners(coord, size):
    """Clamp a coordinate array and split it into base index and fraction."""
    c = np.clip(coord, 0, size - 1)
    if size == 1:
        i0 = np.zeros(coord.shape, dtype=np.intp)
        return c, i0, i0, np.zeros_like(c)
    # non-finite coordinates index pixel 0 and carry NaN through the fraction
    base = np.floor(np.where(np.isfinite(c), c, 0))
    i0 = np.minimum(base.astype(np.intp), size - 2)
    frac = np.where(np.isfinite(c), c - i0, np.nan)
    return c, i0, i0 + 1, frac.astype(c.dtype)


def bilinear_sample(img, x, y):
    """Sample an H×W×C image at real coordinates (x = column, y = row).

    ``x`` and ``y`` share any shape S and the result has shape S×C.
    Coordinates outside the image are clamped to the border; gradients
    reach both the image and in-range coordinates.
    """
    img = _unary(img)
    x = _unary(x)
    y = _unary(y)
    h, w, c = img.shape
    xc, x0, x1, fx = _corners(x.data, w)
    yc, y0, y1, fy = _corners(y.data, h)
    fx = fx[..., None]
    fy = fy[..., None]
    v00 = img.data[y0, x0]
    v01 = img.data[y0, x1]
    v10 = img.data[y1, x0]
    v11 = img.data[y1, x1]
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    out = top + fy * (bot - top)

    def backward(g):
        gimg = gx = gy = None
        if img.requires_grad:
            w00 = (1 - fx) * (1 - fy)
            w01 = fx * (1 - fy)
            w10 = (1 - fx) * fy
            w11 = fx * fy
            idx = np.concatenate([(y0 * w + x0).ravel(), (y0 * w + x1).ravel(),
                                  (y1 * w + x0).ravel(), (y1 * w + x1).ravel()])
            vals = np.concatenate([(w00 * g).reshape(-1, c), (w01 * g).reshape(-1, c),
                                   (w10 * g).reshape(-1, c), (w11 * g).reshape(-1, c)])
            gimg = np.stack([np.bincount(idx, weights=vals[:, ch], minlength=h * w) for ch in range(c)], axis=-1)
            gimg = gimg.reshape(h, w, c).astype(img.dtype, copy=False)
        if x.requires_grad:
            dx = (1 - fy) * (v01 - v00) + fy * (v11 - v10)
            inside = (x.data >= 0) & (x.data <= w - 1) & (w > 1)
            gx = np.where(inside, (dx * g).sum(axis=-1), 0)
        if y.requires_grad:
            dy = bot - top
            inside = (y.data >= 0) & (y.data <= h - 1) & (h > 1)
            gy = np.where(inside, (dy * g).sum(axis=-1), 0)
        return gimg, gx, gy

    return Tensor.node(out, (img, x, y), backward, "bilinear_sample")
