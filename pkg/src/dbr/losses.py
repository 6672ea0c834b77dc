"""Training objective: reflectance fidelity plus noise and illumination priors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import as_tensor
from .autodiff.image_ops import spatial_grad
from .metrics import SSIM_C1, SSIM_C2, ssim_window

GRAD_TERMS = ("l1", "ssim", "none")
ILLUM_NORMS = ("l1", "l2")


@dataclass
class LossConfig:
    lambda_g: float = 0.1
    lambda_n: float = 1.0
    lambda_e: float = 1.0
    theta: float = 1.2
    epsilon: float = 1e-4
    sigma: float = 1.0
    gauss_radius: int = 2
    grad_term: str = "l1"
    illum_norm: str = "l1"

    def __post_init__(self):
        if min(self.lambda_g, self.lambda_n, self.lambda_e) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.sigma < 0.1:
            raise ValueError("sigma must be >= 0.1")
        if self.grad_term not in GRAD_TERMS:
            raise ValueError(f"grad_term must be one of {GRAD_TERMS}")
        if self.illum_norm not in ILLUM_NORMS:
            raise ValueError(f"illum_norm must be one of {ILLUM_NORMS}")


@dataclass
class LossBreakdown:
    total: object
    l_r: object
    l_n: object
    l_e: object

    def values(self):
        return tuple(float(np.asarray(getattr(t, "data", t))) for t in (self.total, self.l_r, self.l_n, self.l_e))


def _check_shapes(*arrs):
    shapes = {tuple(a.shape) for a in arrs}
    if len(shapes) != 1:
        raise ValueError(f"shape mismatch: {sorted(shapes)}")


def ssim_tensor(x, y):
    """Differentiable single-scale SSIM of two H×W×C tensors (valid window)."""
    taps = ssim_window(x.dtype)
    x, y = as_tensor(x), as_tensor(y)

    def filt(t):
        return _valid(t, taps)

    mx, my = filt(x), filt(y)
    sxx = filt(x * x) - mx * mx
    syy = filt(y * y) - my * my
    sxy = filt(x * y) - mx * my
    num = (2 * mx * my + SSIM_C1) * (2 * sxy + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (sxx + syy + SSIM_C2)
    return (num / den).mean()


def _valid(t, taps):
    """Separable correlation over rows and columns keeping valid positions only."""
    taps = [float(v) for v in taps]
    n = len(taps)
    h, w = t.shape[0], t.shape[1]
    rows = sum(taps[i] * t[i:h - n + 1 + i] for i in range(n))
    return sum(taps[i] * rows[:, i:w - n + 1 + i] for i in range(n))


def loss_reflectance(pred, target, cfg):
    pred = as_tensor(pred)
    target = np.asarray(getattr(target, "data", target), dtype=pred.dtype)
    _check_shapes(pred, target)
    intensity = ad.abs(pred - target).mean()
    if cfg.grad_term == "none" or cfg.lambda_g == 0:
        return intensity
    if cfg.grad_term == "ssim":
        return intensity + cfg.lambda_g * (1 - ssim_tensor(pred, target))
    pgx, pgy = spatial_grad(pred)
    tgx, tgy = spatial_grad(target)
    dx = ad.abs(pgx - tgx.data)
    dy = ad.abs(pgy - tgy.data)
    grad = (dx.sum() + dy.sum()) / (2 * dx.size)
    return intensity + cfg.lambda_g * grad


def loss_noise(noise, cfg):
    """Mean over pixels of the l1 norm of the Gaussian-smoothed gradient of N."""
    noise = as_tensor(noise)
    gx, gy = spatial_grad(noise)
    bx = ad.gaussian_blur(gx, cfg.sigma, cfg.gauss_radius)
    by = ad.gaussian_blur(gy, cfg.sigma, cfg.gauss_radius)
    per_pixel = (ad.abs(bx) + ad.abs(by)).sum(axis=-1)
    return per_pixel.mean()


def illum_weight(img, cfg):
    """Constant per-pixel weight ``1 / (|grad I|_1 ** theta + eps)``."""
    img = np.asarray(getattr(img, "data", img))
    gx, gy = spatial_grad(img)
    mag = (np.abs(gx.data) + np.abs(gy.data)).sum(axis=-1)
    return 1.0 / (mag ** cfg.theta + cfg.epsilon)


def loss_illum(illum, img, cfg):
    illum = as_tensor(illum)
    img = np.asarray(getattr(img, "data", img), dtype=illum.dtype)
    _check_shapes(illum, img)
    gx, gy = spatial_grad(illum)
    if cfg.illum_norm == "l2":
        mag = (ad.square(gx) + ad.square(gy)).sum(axis=-1)
    else:
        mag = (ad.abs(gx) + ad.abs(gy)).sum(axis=-1)
    weight = illum_weight(img, cfg).astype(illum.dtype)
    return (mag * weight).mean()


def total_loss(pred, target, noise, illum, img, cfg):
    l_r = loss_reflectance(pred, target, cfg)
    l_n = loss_noise(noise, cfg)
    l_e = loss_illum(illum, img, cfg)
    total = l_r + cfg.lambda_n * l_n + cfg.lambda_e * l_e
    return LossBreakdown(total, l_r, l_n, l_e)
