"""Per-pixel transforms applied with sliced coefficients.

The affine transform yields the illumination layer; the spatially-varying
(deformable) convolution yields the noise layer.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, as_tensor

EPS_ILLUM = 1e-4


class IllumMode(str, Enum):
    SMOOTH = "smooth_reparam"
    CLAMP = "hard_clamp"


def affine_raw(coeffs, img):
    """``A_p [I_p; 1]`` for H×W×3×4 coefficients and an H×W×3 image."""
    coeffs = as_tensor(coeffs)
    img = as_tensor(img)
    if coeffs.shape[-2:] != (3, 4) or coeffs.shape[:2] != img.shape[:2] or img.shape[-1] != 3:
        raise ValueError(f"affine shape mismatch: coeffs {coeffs.shape}, image {img.shape}")
    return ad.pixel_matvec(coeffs[..., :3], img) + coeffs[..., 3]


def constrain_illum(raw, img, mode=IllumMode.CLAMP, eps=EPS_ILLUM):
    """Map raw illumination into ``I <= E <= 1`` and floor it at ``eps``."""
    img = as_tensor(img)
    mode = IllumMode(mode)
    if mode is IllumMode.SMOOTH:
        e = img + ad.sigmoid(raw) * (1 - img)
    else:
        e = ad.clamp(raw, lo=img.data, hi=1.0)
    return ad.clamp(e, lo=eps)


def map_offsets(raw, window):
    """Squash raw offsets into ``(-window, window)``."""
    return (2 * ad.sigmoid(raw) - 1) * float(window)


def normalize_kernels(kernels, mode="zero_mean"):
    """Normalize per-pixel kernels shaped H×W×T×3×3 (T taps).

    ``zero_mean``: subtract, per pixel and matrix entry, the mean over taps.
    ``softmax``: per matrix entry, softmax over taps.
    ``softmax_convex``: per output channel, softmax jointly over taps and
    input channels, so each output channel is a convex combination.
    """
    kernels = as_tensor(kernels)
    if mode == "zero_mean":
        return kernels - kernels.mean(axis=-3, keepdims=True)
    if mode == "softmax":
        return ad.softmax(kernels, axis=-3)
    if mode == "softmax_convex":
        h, w, t = kernels.shape[:3]
        k = kernels.transpose(0, 1, 3, 2, 4).reshape(h, w, 3, t * 3)
        k = ad.softmax(k, axis=-1)
        return k.reshape(h, w, 3, t, 3).transpose(0, 1, 3, 2, 4)
    raise ValueError(f"unknown kernel normalization {mode!r}")


def tap_offsets(k):
    """Rigid (row, col) displacements of a K×K neighbourhood, row-major."""
    r = k // 2
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    return dy.ravel(), dx.ravel()


def deformable_conv(img, kernels, offsets=None):
    """Spatially-varying deformable convolution.

    ``kernels`` is H×W×K²×3×3 (already normalized), ``offsets`` is
    H×W×K²×2 holding (x, y) displacements added to each rigid tap
    position, or None for a rigid neighbourhood. Samples are read with
    border-clamped bilinear interpolation.
    """
    img = as_tensor(img)
    kernels = as_tensor(kernels)
    h, w = img.shape[:2]
    taps = kernels.shape[2]
    k = int(round(np.sqrt(taps)))
    if k * k != taps or kernels.shape != (h, w, taps, 3, 3):
        raise ValueError(f"kernel shape {kernels.shape} does not match image {img.shape}")
    dy, dx = tap_offsets(k)
    rows = np.arange(h, dtype=img.dtype)[:, None, None]
    cols = np.arange(w, dtype=img.dtype)[None, :, None]
    base_x = np.broadcast_to(cols + dx.astype(img.dtype), (h, w, taps))
    base_y = np.broadcast_to(rows + dy.astype(img.dtype), (h, w, taps))
    if offsets is None:
        xs, ys = Tensor(np.ascontiguousarray(base_x)), Tensor(np.ascontiguousarray(base_y))
    else:
        offsets = as_tensor(offsets)
        if offsets.shape != (h, w, taps, 2):
            raise ValueError(f"offset shape {offsets.shape} does not match kernels {kernels.shape}")
        xs = offsets[..., 0] + base_x
        ys = offsets[..., 1] + base_y
    samples = ad.bilinear_sample(img, xs, ys)  # H×W×T×3
    return ad.pixel_matvec(kernels, samples).sum(axis=2)


def rigid_conv(img, kernels):
    return deformable_conv(img, kernels, None)


def affine_noise(coeffs, img):
    """Point-wise noise transform of the same form as the illumination one."""
    return affine_raw(coeffs, img)
