"""Coefficient-prediction network producing the bilateral grid.

A local stream of stride-2 convolutions reduces a fixed low-resolution
copy of the input to the grid's spatial size; a global stream (strided
convolutions + fully-connected layers) summarizes the whole image. The
global feature is broadcast-added onto the local map, rectified, and
projected to ``depth * L`` channels that are unrolled into the range axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, as_tensor

NOISE_TRANSFORMS = ("deformable", "rigid", "affine", "none")


@dataclass(frozen=True)
class GridLayout:
    """Channel packing of the coefficient map: name -> (start, stop)."""

    blocks: tuple

    @classmethod
    def for_transform(cls, noise_transform="deformable", kernel_size=3):
        k2 = kernel_size * kernel_size
        sizes = [("affine", 12)]
        if noise_transform in ("deformable", "rigid"):
            sizes.append(("kernels", 9 * k2))
        if noise_transform == "deformable":
            sizes.append(("offsets", 2 * k2))
        if noise_transform == "affine":
            sizes.append(("noise_affine", 12))
        if noise_transform not in NOISE_TRANSFORMS:
            raise ValueError(f"unknown noise transform {noise_transform!r}")
        blocks, start = [], 0
        for name, n in sizes:
            blocks.append((name, start, start + n))
            start += n
        return cls(tuple(blocks))

    @property
    def channels(self):
        return self.blocks[-1][2]

    def span(self, name):
        for block, start, stop in self.blocks:
            if block == name:
                return start, stop
        raise KeyError(name)

    def __contains__(self, name):
        return any(b == name for b, _, _ in self.blocks)


def unpack_coeffs(gamma, layout):
    """Split an H×W×L coefficient map into its named, reshaped blocks."""
    gamma = as_tensor(gamma)
    if gamma.ndim != 3 or gamma.shape[2] != layout.channels:
        raise ValueError(f"coefficient map has shape {gamma.shape}, layout expects {layout.channels} channels")
    h, w = gamma.shape[:2]
    out = {}
    for name, start, stop in layout.blocks:
        block = gamma[..., start:stop]
        if name in ("affine", "noise_affine"):
            block = block.reshape(h, w, 3, 4)
        elif name == "kernels":
            block = block.reshape(h, w, (stop - start) // 9, 3, 3)
        elif name == "offsets":
            block = block.reshape(h, w, (stop - start) // 2, 2)
        out[name] = block
    return out


def pack_coeffs(blocks, layout):
    """Inverse of :func:`unpack_coeffs` (arrays in, array out)."""
    parts = []
    for name, start, stop in layout.blocks:
        b = np.asarray(blocks[name])
        parts.append(b.reshape(b.shape[0], b.shape[1], stop - start))
    return np.concatenate(parts, axis=-1)


@dataclass
class PredictorConfig:
    lowres: int = 256
    grid_spatial: int = 16
    grid_depth: int = 8
    local_widths: tuple = (8, 16, 32, 64)
    global_convs: int = 2
    global_fc: tuple = (256, 64)
    channels: int = 111

    def __post_init__(self):
        n = len(self.local_widths)
        if self.lowres != self.grid_spatial * 2 ** n:
            raise ValueError(
                f"lowres {self.lowres} must equal grid_spatial {self.grid_spatial} * 2**{n} (one stride-2 conv per local width)"
            )
        if self.global_fc[-1] != self.local_widths[-1]:
            raise ValueError("last global width must match the local feature width")


def layer_shapes(cfg):
    shapes = {}
    c_in = 3
    for i, c in enumerate(cfg.local_widths):
        shapes[f"local{i}.w"] = (c, c_in, 3, 3)
        shapes[f"local{i}.b"] = (c,)
        c_in = c
    feat = c_in
    for i in range(2):
        shapes[f"lhead{i}.w"] = (feat, feat, 3, 3)
        shapes[f"lhead{i}.b"] = (feat,)
    for i in range(cfg.global_convs):
        shapes[f"gconv{i}.w"] = (feat, feat, 3, 3)
        shapes[f"gconv{i}.b"] = (feat,)
    side = cfg.grid_spatial // 2 ** cfg.global_convs
    d_in = feat * side * side
    for i, d in enumerate(cfg.global_fc):
        shapes[f"fc{i}.w"] = (d_in, d)
        shapes[f"fc{i}.b"] = (d,)
        d_in = d
    shapes["proj.w"] = (cfg.grid_depth * cfg.channels, feat, 1, 1)
    shapes["proj.b"] = (cfg.grid_depth * cfg.channels,)
    return shapes


def fan_in(name, shape):
    if name.startswith("fc"):
        return shape[0]
    return int(np.prod(shape[1:]))


def init_params(cfg, seed=0, layout=None, dtype=np.float32):
    """He-normal weights (variance 2/fan_in), zero biases.

    Projection rows feeding raw offsets start at zero so the initial
    offsets are exactly zero.
    """
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in layer_shapes(cfg).items():
        if name.endswith(".b"):
            arr = np.zeros(shape)
        else:
            arr = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in(name, shape))
        params[name] = arr
    if layout is not None and "offsets" in layout:
        start, stop = layout.span("offsets")
        w = params["proj.w"].reshape(cfg.grid_depth, cfg.channels, -1)
        w[:, start:stop] = 0
    return {k: Tensor(v.astype(dtype), requires_grad=True) for k, v in params.items()}


def identity_params(cfg, layout, dtype=np.float32, saturation=1e4):
    """Parameters forcing N = 0 and E = 1 (so the output equals the input).

    All weights are zero; the projection bias saturates the illumination
    offset term.
    """
    params = {name: np.zeros(shape) for name, shape in layer_shapes(cfg).items()}
    bias = params["proj.b"].reshape(cfg.grid_depth, cfg.channels)
    start, _ = layout.span("affine")
    for c in range(3):
        bias[:, start + 4 * c + 3] = saturation
    return {k: Tensor(v.astype(dtype), requires_grad=True) for k, v in params.items()}


def downsample_input(img, size=256):
    """Bilinear resize to ``size``×``size`` (aspect ratio not kept)."""
    img = as_tensor(img)
    if img.shape[0] == size and img.shape[1] == size:
        return img
    return ad.resize_bilinear(img, size, size)


def predict_grid(params, lowres, cfg):
    """Run the two-stream network; returns a Gx×Gy×Gz×L grid tensor."""
    lowres = as_tensor(lowres)
    if lowres.shape != (cfg.lowres, cfg.lowres, 3):
        raise ValueError(f"predictor expects {cfg.lowres}x{cfg.lowres}x3 input, got {lowres.shape}")
    expected = layer_shapes(cfg)
    for name, shape in expected.items():
        if name not in params or params[name].shape != shape:
            got = params[name].shape if name in params else None
            raise ValueError(f"parameter {name}: expected shape {shape}, got {got}")

    x = lowres.transpose(2, 0, 1).reshape(1, 3, cfg.lowres, cfg.lowres)
    for i in range(len(cfg.local_widths)):
        x = ad.relu(ad.conv2d(x, params[f"local{i}.w"], params[f"local{i}.b"], stride=2))
    feat = x

    local = ad.relu(ad.conv2d(feat, params["lhead0.w"], params["lhead0.b"]))
    local = ad.conv2d(local, params["lhead1.w"], params["lhead1.b"])

    g = feat
    for i in range(cfg.global_convs):
        g = ad.relu(ad.conv2d(g, params[f"gconv{i}.w"], params[f"gconv{i}.b"], stride=2))
    g = g.reshape(1, -1)
    n_fc = len(cfg.global_fc)
    for i in range(n_fc):
        g = ad.fully_connected(g, params[f"fc{i}.w"], params[f"fc{i}.b"])
        if i < n_fc - 1:
            g = ad.relu(g)

    fused = ad.relu(local + g.reshape(1, -1, 1, 1))
    out = ad.conv2d(fused, params["proj.w"], params["proj.b"])  # 1×(D·L)×S×S
    s, d, nl = cfg.grid_spatial, cfg.grid_depth, cfg.channels
    return out.reshape(d, nl, s, s).transpose(2, 3, 0, 1)
