"""Full-reference quality metrics (PSNR, SSIM) and lightness order error."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

PSNR_SENTINEL = 99.0
SSIM_WIN = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 1.0) ** 2
SSIM_C2 = (0.03 * 1.0) ** 2
METRICS = ("psnr", "ssim", "loe")
COLUMNS = {"psnr": "psnr_db", "ssim": "ssim", "loe": "loe"}


def psnr(x, y):
    """PSNR in dB for [0, 1] images; identical images give 99.0."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    mse = np.mean((x - y) ** 2)
    if mse == 0:
        return PSNR_SENTINEL
    return float(10.0 * np.log10(1.0 / mse))


def ssim_window(dtype=np.float64):
    t = np.arange(SSIM_WIN, dtype=np.float64) - SSIM_WIN // 2
    k = np.exp(-(t * t) / (2 * SSIM_SIGMA ** 2))
    return (k / k.sum()).astype(dtype)


def _filter_valid(img, taps):
    n = len(taps)
    h, w = img.shape
    rows = sum(taps[i] * img[i:h - n + 1 + i] for i in range(n))
    return sum(taps[i] * rows[:, i:w - n + 1 + i] for i in range(n))


def _ssim_channel(x, y, taps):
    mx, my = _filter_valid(x, taps), _filter_valid(y, taps)
    sxx = _filter_valid(x * x, taps) - mx * mx
    syy = _filter_valid(y * y, taps) - my * my
    sxy = _filter_valid(x * y, taps) - mx * my
    num = (2 * mx * my + SSIM_C1) * (2 * sxy + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (sxx + syy + SSIM_C2)
    return float(np.mean(num / den))


def ssim(x, y):
    """Single-scale SSIM (11×11 Gaussian, sigma 1.5), averaged over channels."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    if x.ndim == 2:
        x, y = x[..., None], y[..., None]
    if min(x.shape[:2]) < SSIM_WIN:
        raise ValueError(f"images must be at least {SSIM_WIN}x{SSIM_WIN}")
    taps = ssim_window()
    return float(np.mean([_ssim_channel(x[..., c], y[..., c], taps) for c in range(x.shape[2])]))


def _sample_indices(n, down):
    if n <= down:
        return np.arange(n)
    return (np.arange(down) * n) // down


def lightness(img):
    img = np.asarray(img, dtype=np.float64)
    return img.max(axis=-1) if img.ndim == 3 else img


def loe(original, enhanced, down=100, chunk=512):
    """Lightness order error between two images.

    Lightness is the per-pixel RGB maximum; both maps are subsampled to at
    most ``down``×``down`` on a uniform nearest grid.
    """
    a = lightness(original)
    b = lightness(enhanced)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    rows = _sample_indices(a.shape[0], down)
    cols = _sample_indices(a.shape[1], down)
    a = a[np.ix_(rows, cols)].ravel()
    b = b[np.ix_(rows, cols)].ravel()
    m = a.size
    errors = 0
    for start in range(0, m, chunk):
        oa = a[start:start + chunk, None] >= a[None, :]
        ob = b[start:start + chunk, None] >= b[None, :]
        errors += int(np.count_nonzero(oa != ob))
    return errors / m


_FUNCS = {"psnr": lambda low, out, ref: psnr(out, ref),
          "ssim": lambda low, out, ref: ssim(out, ref),
          "loe": lambda low, out, ref: loe(low, out)}


@dataclass
class MetricReport:
    metrics: tuple
    rows: list = field(default_factory=list)

    def means(self):
        if not self.rows:
            return {m: float("nan") for m in self.metrics}
        return {m: float(np.mean([r[m] for r in self.rows])) for m in self.metrics}

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id"] + [COLUMNS[m] for m in self.metrics])
        for r in self.rows:
            writer.writerow([r["id"]] + [f"{r[m]:.6f}" for m in self.metrics])
        means = self.means()
        writer.writerow(["MEAN"] + [f"{means[m]:.6f}" for m in self.metrics])
        return buf.getvalue()

    def mean_line(self):
        return self.to_csv().strip().splitlines()[-1]


def evaluate(dataset, enhancer, metrics=METRICS):
    """Score ``enhancer(low)`` against each pair's reference.

    LOE is measured against the low-light input.
    """
    metrics = tuple(metrics)
    if not metrics:
        raise ValueError("metric list is empty")
    unknown = [m for m in metrics if m not in _FUNCS]
    if unknown:
        raise ValueError(f"unknown metrics: {unknown}")
    report = MetricReport(metrics)
    for pair in dataset:
        out = np.asarray(enhancer(pair.low))
        row = {"id": pair.id}
        for m in metrics:
            row[m] = _FUNCS[m](pair.low, out, pair.reference)
        report.rows.append(row)
    return report
