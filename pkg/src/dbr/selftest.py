"""Built-in verification: gradient checks, loop oracles and invariants.

Each check measures one error figure and compares it to a tolerance.
``run_selftest(tol=...)`` overrides every tolerance at once, which is
handy for demonstrating that the checks can fail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import oracles
from .grid import slice_grid
from .losses import LossConfig, loss_illum, loss_noise, loss_reflectance, total_loss
from .pipeline import PipelineConfig, decompose
from .predictor import PredictorConfig, init_params
from .transforms import constrain_illum, deformable_conv, map_offsets, normalize_kernels


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28s} error={self.error:.3e}  tol={self.tolerance:.1e}"


def tiny_predictor():
    """A small two-stream predictor (16×16 input, 4×4×8 grid) for fast checks."""
    return PredictorConfig(lowres=16, grid_spatial=4, grid_depth=8, local_widths=(4, 8),
                           global_convs=1, global_fc=(16, 8))


def probe_params(pcfg, seed, dtype=np.float64):
    """Initial parameters with a jittered projection.

    Fresh initialization has exactly zero offsets, which puts every tap on
    an integer pixel position where bilinear sampling has a kink; the
    jitter moves offsets to generic fractional values so finite
    differences are meaningful.
    """
    params = init_params(pcfg.predictor, seed, pcfg.layout, dtype)
    rng = np.random.default_rng(seed + 1)
    for name in ("proj.w", "proj.b"):
        params[name].data += (0.05 * rng.standard_normal(params[name].shape)).astype(dtype)
    return params


def _away_from_zero(rng, shape, margin=0.05):
    x = rng.uniform(margin, 1.0, size=shape)
    return x * rng.choice([-1.0, 1.0], size=shape)


def _kink_free(rng, shape, lo=0.0, hi=1.0, margin=1e-3):
    """Random image whose forward differences all stay clear of zero."""
    while True:
        x = rng.uniform(lo, hi, shape)
        if min(np.abs(np.diff(x, axis=0)).min(), np.abs(np.diff(x, axis=1)).min()) > margin:
            return x


def _grad_primitives():
    rng = np.random.default_rng(1)
    a = rng.uniform(0.5, 2.0, (3, 4))
    b = rng.uniform(0.5, 2.0, (3, 4))
    x = _away_from_zero(rng, (3, 4))
    cases = [
        (lambda p, q: p * q + p - q, [a, b]),
        (lambda p, q: ad.div(p, q), [a, b]),
        (lambda p: ad.exp(p) + ad.log(p) + ad.sqrt(p) + p ** 3, [a]),
        (lambda p: ad.sigmoid(p), [x]),
        (lambda p: ad.relu(p), [x]),
        (lambda p: ad.abs(p), [x]),
        (lambda p: ad.softmax(p, axis=-1), [x]),
        (lambda p, q: ad.matmul(p, q.transpose()), [a, b]),
    ]
    return max(ad.grad_check(fn, ins).max_rel_error for fn, ins in cases)


def _grad_conv_fc():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((1, 2, 6, 6))
    w = rng.standard_normal((3, 2, 3, 3))
    bias = rng.standard_normal(3)
    e1 = ad.grad_check(lambda a, b, c: ad.conv2d(a, b, c, stride=2), [x, w, bias]).max_rel_error
    xf = rng.standard_normal((2, 5))
    wf = rng.standard_normal((5, 3))
    e2 = ad.grad_check(lambda a, b, c: ad.sigmoid(ad.fully_connected(a, b, c)), [xf, wf, bias]).max_rel_error
    return max(e1, e2)


def _grad_image_ops():
    rng = np.random.default_rng(3)
    img = rng.standard_normal((5, 6, 2))
    e1 = ad.grad_check(lambda t: ad.gaussian_blur(t, 1.0, 2), [img]).max_rel_error
    gx_err = ad.grad_check(lambda t: ad.spatial_grad(t)[0] * 2 + ad.spatial_grad(t)[1], [img]).max_rel_error
    xs = rng.integers(0, 5, 10) + rng.uniform(0.1, 0.9, 10)
    ys = rng.integers(0, 4, 10) + rng.uniform(0.1, 0.9, 10)
    e3 = ad.grad_check(lambda t, x, y: ad.bilinear_sample(t, x, y), [img, xs, ys]).max_rel_error
    return max(e1, gx_err, e3)


def _grad_slice():
    rng = np.random.default_rng(4)
    grid = rng.standard_normal((3, 4, 5, 2))
    guide = (rng.integers(0, 4, (6, 7)) + rng.uniform(0.1, 0.9, (6, 7))) / 4.0
    return ad.grad_check(slice_grid, [grid, guide]).max_rel_error


def _grad_deformable():
    rng = np.random.default_rng(5)
    img = rng.uniform(0, 1, (6, 6, 3))
    kern = rng.standard_normal((6, 6, 9, 3, 3))
    raw = rng.standard_normal((6, 6, 9, 2)) * 0.1
    offs = np.round(raw * 10) / 10 + 0.05 + 0.4 * rng.uniform(0, 1, raw.shape)
    return ad.grad_check(lambda i, k, o: deformable_conv(i, normalize_kernels(k), o),
                         [img, kern, offs], probes=40).max_rel_error


def _grad_losses():
    rng = np.random.default_rng(6)
    cfg = LossConfig()
    pred, target = rng.uniform(0, 1, (6, 6, 3)), rng.uniform(0, 1, (6, 6, 3))
    noise = rng.standard_normal((6, 6, 3)) * 0.1
    illum, img = _kink_free(rng, (6, 6, 3), 0.2, 1.0), rng.uniform(0, 0.3, (6, 6, 3))
    e1 = ad.grad_check(lambda p: loss_reflectance(p, target, cfg), [pred]).max_rel_error
    e2 = ad.grad_check(lambda n: loss_noise(n, cfg), [noise]).max_rel_error
    e3 = ad.grad_check(lambda e: loss_illum(e, img, cfg), [illum]).max_rel_error
    return max(e1, e2, e3)


def _grad_decompose():
    rng = np.random.default_rng(7)
    pcfg = PipelineConfig(predictor=tiny_predictor())
    params = probe_params(pcfg, 3)
    names = ["proj.w", "proj.b", "lhead1.w", "fc1.w", "local0.w"]
    img = rng.uniform(0.05, 0.4, (12, 12, 3))
    ref = rng.uniform(0, 1, (12, 12, 3))
    lcfg = LossConfig()

    def fn(*arrs):
        local = dict(params)
        local.update(zip(names, arrs))
        dec = decompose(img, local, pcfg)
        return total_loss(dec.reflectance, ref, dec.noise, dec.illumination, img, lcfg).total

    probe = [params[n].data for n in names]
    return ad.grad_check(fn, probe, probes=5, seed=1).max_rel_error


def _oracle_slice():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(5):
        grid = rng.standard_normal((4, 4, 4, 2))
        guide = rng.uniform(0, 1, (5, 6))
        fast = slice_grid(grid, guide).data
        worst = max(worst, float(np.abs(fast - oracles.slice_triple_sum(grid, guide)).max()))
    return worst


def _oracle_deformable():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(3):
        img = rng.uniform(0, 1, (8, 8, 3))
        kern = normalize_kernels(rng.standard_normal((8, 8, 9, 3, 3))).data
        offs = map_offsets(rng.standard_normal((8, 8, 9, 2)), 15.0).data
        fast = deformable_conv(img, kern, offs).data
        worst = max(worst, float(np.abs(fast - oracles.deformable_loop(img, kern, offs)).max()))
    return worst


def _oracle_losses():
    rng = np.random.default_rng(10)
    cfg = LossConfig()
    a, b = rng.uniform(0, 1, (6, 6, 3)), rng.uniform(0, 1, (6, 6, 3))
    errs = [
        abs(float(loss_reflectance(a, b, cfg).data) - oracles.reflectance_loss_loop(a, b, cfg.lambda_g)),
        abs(float(loss_noise(a, cfg).data) - oracles.noise_loss_loop(a, cfg.sigma, cfg.gauss_radius)),
        abs(float(loss_illum(a, b, cfg).data) - oracles.illum_loss_loop(a, b, cfg.theta, cfg.epsilon)),
    ]
    return max(errs)


def _invariant_bounds():
    rng = np.random.default_rng(11)
    worst = 0.0
    for mode in ("smooth_reparam", "hard_clamp"):
        img = rng.uniform(0, 1, (8, 8, 3))
        raw = rng.standard_normal((8, 8, 3)) * 5
        e = constrain_illum(raw, img, mode).data
        worst = max(worst, float(np.max(img - e)), float(np.max(e - 1)), float(np.max(1e-4 - e)))
    return max(worst, 0.0)


def _invariant_reconstruction():
    rng = np.random.default_rng(12)
    pcfg = PipelineConfig(predictor=tiny_predictor())
    params = init_params(pcfg.predictor, 5, pcfg.layout, np.float64)
    img = rng.uniform(0, 1, (20, 24, 3))
    dec = decompose(img, params, pcfg)
    e, n, r = dec.arrays()
    return float(np.abs(r * e + n - img).max())


def _invariant_annihilation():
    rng = np.random.default_rng(13)
    img = np.full((7, 7, 3), 0.37)
    kern = normalize_kernels(rng.standard_normal((7, 7, 9, 3, 3))).data
    offs = map_offsets(rng.standard_normal((7, 7, 9, 2)) * 3, 15.0).data
    return float(np.abs(deformable_conv(img, kern, offs).data).max())


CHECKS = [
    ("grad.primitives", _grad_primitives, 1e-4),
    ("grad.conv2d_fc", _grad_conv_fc, 1e-4),
    ("grad.image_ops", _grad_image_ops, 1e-4),
    ("grad.slice", _grad_slice, 1e-4),
    ("grad.deformable_conv", _grad_deformable, 1e-4),
    ("grad.losses", _grad_losses, 1e-4),
    ("grad.decompose", _grad_decompose, 1e-3),
    ("oracle.slice", _oracle_slice, 1e-12),
    ("oracle.deformable_conv", _oracle_deformable, 1e-10),
    ("oracle.losses", _oracle_losses, 1e-10),
    ("invariant.illum_bounds", _invariant_bounds, 0.0),
    ("invariant.reconstruction", _invariant_reconstruction, 1e-5),
    ("invariant.annihilation", _invariant_annihilation, 1e-6),
]


def run_selftest(tol=None, only=None):
    results = []
    for name, fn, default in CHECKS:
        if only and name not in only:
            continue
        try:
            err = float(fn())
        except Exception:  # a crashing check is a failing check
            err = float("inf")
        results.append(CheckResult(name, err, default if tol is None else tol))
    return results
