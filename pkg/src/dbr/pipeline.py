"""Full decomposition I -> (E, N) -> R and image enhancement."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, as_tensor
from .grid import compute_guidance, slice_grid
from .imageio import save_image
from .predictor import GridLayout, PredictorConfig, downsample_input, predict_grid, unpack_coeffs
from .transforms import (
    EPS_ILLUM,
    IllumMode,
    affine_noise,
    affine_raw,
    constrain_illum,
    deformable_conv,
    map_offsets,
    normalize_kernels,
)

INTERMEDIATES = ("noise", "noise_free")


@dataclass
class PipelineConfig:
    noise_transform: str = "deformable"
    intermediate: str = "noise"
    window: float = 15.0
    kernel_size: int = 3
    illum_mode: str = "hard_clamp"
    clamp_output: bool = True
    predictor: PredictorConfig = field(default_factory=PredictorConfig)

    def __post_init__(self):
        if self.intermediate not in INTERMEDIATES:
            raise ValueError(f"intermediate must be one of {INTERMEDIATES}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        if self.window < 0:
            raise ValueError("window must be non-negative")
        IllumMode(self.illum_mode)
        layout = self.layout
        if self.predictor.channels != layout.channels:
            p = self.predictor
            self.predictor = PredictorConfig(p.lowres, p.grid_spatial, p.grid_depth, p.local_widths,
                                             p.global_convs, p.global_fc, layout.channels)

    @property
    def layout(self):
        return GridLayout.for_transform(self.noise_transform, self.kernel_size)


@dataclass
class Decomposition:
    illumination: Tensor
    noise: Tensor
    reflectance: Tensor

    def arrays(self):
        return self.illumination.data, self.noise.data, self.reflectance.data


def decompose(img, params, cfg):
    """Estimate illumination and noise, then invert for the reflectance.

    The returned reflectance is unclamped; clamping happens in
    :func:`enhance` so that training sees the raw inversion.
    """
    img = as_tensor(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an H×W×3 image, got shape {img.shape}")
    layout = cfg.layout
    lowres = downsample_input(img, cfg.predictor.lowres)
    grid = predict_grid(params, lowres, cfg.predictor)
    gamma = slice_grid(grid, compute_guidance(img))
    blocks = unpack_coeffs(gamma, layout)

    illum = constrain_illum(affine_raw(blocks["affine"], img), img, cfg.illum_mode)

    noise_free = cfg.intermediate == "noise_free"
    kind = cfg.noise_transform
    if kind == "none":
        second = None
    elif kind == "affine":
        second = affine_noise(blocks["noise_affine"], img)
    else:
        mode = "softmax_convex" if noise_free else "zero_mean"
        kernels = normalize_kernels(blocks["kernels"], mode)
        offsets = map_offsets(blocks["offsets"], cfg.window) if kind == "deformable" else None
        second = deformable_conv(img, kernels, offsets)

    if second is None:
        noise = Tensor(np.zeros(img.shape, dtype=img.dtype))
    elif noise_free:
        noise = img - second
    else:
        noise = second
    reflectance = ad.div(img - noise, illum)
    return Decomposition(illum, noise, reflectance)


def enhance(img, params, cfg):
    """Enhanced image: the reflectance layer, clamped to [0, 1] if configured."""
    r = decompose(img, params, cfg).reflectance.data
    return np.clip(r, 0.0, 1.0) if cfg.clamp_output else r


def dump_decomposition(dec, stem, out_dir):
    """Write ``<stem>_E.png``, ``<stem>_N.png`` (shifted by 0.5) and ``<stem>_R.png``."""
    out_dir = Path(out_dir)
    e, n, r = dec.arrays()
    paths = [out_dir / f"{stem}_E.png", out_dir / f"{stem}_N.png", out_dir / f"{stem}_R.png"]
    save_image(e, paths[0])
    save_image(np.clip(n + 0.5, 0, 1), paths[1])
    save_image(np.clip(r, 0, 1), paths[2])
    return paths


__all__ = ["PipelineConfig", "Decomposition", "decompose", "enhance", "dump_decomposition", "EPS_ILLUM"]
