"""PNG loading/saving, paired datasets and augmented patch sampling.

Images are float arrays of shape H×W×C with values in [0, 1].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .autodiff.nn import resize_matrix

log = logging.getLogger(__name__)


class ImageFormatError(ValueError):
    """Raised for PNGs outside the supported 8-bit RGB/grayscale subset."""


class DatasetError(ValueError):
    """Raised when a paired dataset cannot be assembled."""


_SUPPORTED_MODES = {"RGB": 3, "L": 1}


def load_image(path, dtype=np.float32):
    """Load an 8-bit RGB or grayscale PNG as an H×W×3 array in [0, 1].

    Grayscale images are replicated to three channels.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    with Image.open(path) as im:
        if im.format != "PNG":
            raise ImageFormatError(f"{path}: not a PNG ({im.format})")
        if im.mode not in _SUPPORTED_MODES:
            raise ImageFormatError(f"{path}: unsupported PNG mode {im.mode!r} (need 8-bit RGB or grayscale)")
        raw = np.asarray(im, dtype=np.uint8)
    if raw.ndim == 2:
        raw = np.repeat(raw[..., None], 3, axis=2)
    return (raw.astype(np.float64) / 255.0).astype(dtype)


def quantize(img):
    """Clamp to [0, 1] and round half-up to 8-bit."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(img * 255.0 + 0.5).astype(np.uint8)


def save_image(img, path):
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[..., None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"expected H×W×1 or H×W×3 image, got shape {img.shape}")
    q = quantize(img)
    mode = "RGB" if q.shape[2] == 3 else "L"
    Image.fromarray(q if mode == "RGB" else q[..., 0], mode=mode).save(Path(path), format="PNG")


@dataclass
class Pair:
    low: np.ndarray
    reference: np.ndarray
    id: str


@dataclass
class PairedDataset:
    pairs: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]


def load_paired_dataset(low_dir, ref_dir, dtype=np.float32):
    """Match PNGs by filename across two directories, sorted by name."""
    low_dir, ref_dir = Path(low_dir), Path(ref_dir)
    for d in (low_dir, ref_dir):
        if not d.is_dir():
            raise DatasetError(f"not a directory: {d}")
    low = {p.name for p in low_dir.glob("*.png")}
    ref = {p.name for p in ref_dir.glob("*.png")}
    common = sorted(low & ref)
    if not common:
        raise DatasetError(f"no matching PNG filenames between {low_dir} and {ref_dir}")
    skipped = sorted(low ^ ref)
    for name in skipped:
        log.warning("unmatched file skipped: %s", name)
    pairs = []
    for name in common:
        a = load_image(low_dir / name, dtype)
        b = load_image(ref_dir / name, dtype)
        if a.shape != b.shape:
            raise DatasetError(f"{name}: size mismatch {a.shape} vs {b.shape}")
        pairs.append(Pair(a, b, Path(name).stem))
    return PairedDataset(pairs, skipped)


def load_dataset_root(root, dtype=np.float32):
    """Load the ``<root>/low`` + ``<root>/high`` layout."""
    root = Path(root)
    return load_paired_dataset(root / "low", root / "high", dtype)


@dataclass
class AugmentConfig:
    patch_size: int = 64
    mirror: bool = True
    rotate: bool = True
    resize_range: tuple = (0.75, 1.25)
    seed: int = 0

    def __post_init__(self):
        if self.patch_size < 16 or self.patch_size % 2:
            raise ValueError(f"patch_size must be even and >= 16, got {self.patch_size}")
        lo, hi = self.resize_range
        if not 0 < lo <= hi:
            raise ValueError(f"bad resize_range {self.resize_range}")


def _resize(img, out_h, out_w):
    ry = resize_matrix(out_h, img.shape[0], np.float64)
    rx = resize_matrix(out_w, img.shape[1], np.float64)
    out = np.einsum("ah,hwc,bw->abc", ry, img.astype(np.float64), rx, optimize=True)
    return out.astype(img.dtype)


def sample_patch(pair, cfg, rng):
    """Draw one augmented patch pair; the same geometry is applied to both.

    Order: resize, crop, mirror, rotate by a multiple of 90 degrees.
    """
    low, ref = pair.low, pair.reference
    h, w = low.shape[:2]
    p = cfg.patch_size
    lo, hi = cfg.resize_range
    lo = max(lo, p / min(h, w))
    if lo > hi + 1e-12:
        raise ValueError(f"patch {p} larger than image {h}x{w} at any allowed scale")
    scale = float(rng.uniform(lo, hi)) if hi > lo else lo
    if scale != 1.0:
        nh = max(p, int(round(h * scale)))
        nw = max(p, int(round(w * scale)))
        low, ref = _resize(low, nh, nw), _resize(ref, nh, nw)
        h, w = nh, nw
    top = int(rng.integers(0, h - p + 1))
    left = int(rng.integers(0, w - p + 1))
    low = low[top:top + p, left:left + p]
    ref = ref[top:top + p, left:left + p]
    if cfg.mirror and rng.random() < 0.5:
        low, ref = low[:, ::-1], ref[:, ::-1]
    if cfg.rotate:
        k = int(rng.integers(0, 4))
        low, ref = np.rot90(low, k), np.rot90(ref, k)
    return np.ascontiguousarray(low), np.ascontiguousarray(ref)


# ---------------------------------------------------------------------------
# synthetic low/normal-light pairs

def _synthetic_scene(rng, size):
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w] / float(size)
    base = np.empty((h, w, 3))
    c0, c1 = rng.uniform(0.2, 0.9, 3), rng.uniform(0.2, 0.9, 3)
    angle = rng.uniform(0, np.pi)
    ramp = (np.cos(angle) * xx + np.sin(angle) * yy)
    ramp = (ramp - ramp.min()) / (np.ptp(ramp) + 1e-9)
    base[:] = c0 + ramp[..., None] * (c1 - c0)
    for _ in range(rng.integers(3, 7)):
        color = rng.uniform(0.05, 1.0, 3)
        cy, cx = rng.uniform(0, 1, 2)
        if rng.random() < 0.5:
            r = rng.uniform(0.08, 0.3)
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
        else:
            hh, ww = rng.uniform(0.1, 0.4, 2)
            mask = (np.abs(yy - cy) < hh / 2) & (np.abs(xx - cx) < ww / 2)
        base[mask] = color
    freq = rng.uniform(8, 20)
    texture = 0.04 * np.sin(2 * np.pi * freq * xx) * np.sin(2 * np.pi * freq * yy)
    return np.clip(base + texture[..., None], 0, 1)


def synthesize_pair(rng, size=96):
    """A bright scene and a dark, noisy 8-bit rendering of it."""
    ref = _synthetic_scene(rng, size)
    gain = rng.uniform(0.08, 0.2)
    dark = ref * gain
    shot = rng.uniform(0.005, 0.015)
    read = rng.uniform(0.002, 0.006)
    noisy = dark + np.sqrt(shot * dark + read ** 2) * rng.standard_normal(dark.shape)
    low = quantize(noisy).astype(np.float64) / 255.0
    ref = quantize(ref).astype(np.float64) / 255.0
    return low, ref


def synthesize_dataset(n, size=96, seed=0, dtype=np.float32):
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n):
        low, ref = synthesize_pair(rng, size)
        pairs.append(Pair(low.astype(dtype), ref.astype(dtype), f"{i + 1:03d}"))
    return PairedDataset(pairs)


def write_dataset(dataset, root):
    root = Path(root)
    (root / "low").mkdir(parents=True, exist_ok=True)
    (root / "high").mkdir(parents=True, exist_ok=True)
    for pair in dataset:
        save_image(pair.low, root / "low" / f"{pair.id}.png")
        save_image(pair.reference, root / "high" / f"{pair.id}.png")
