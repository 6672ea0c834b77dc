"""Guidance map and bilateral-grid slicing."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .autodiff import Tensor, as_tensor

LUMA = (0.299, 0.587, 0.114)


def compute_guidance(img):
    """Continuous luminance guidance J in [0, 1] from an H×W×3 image."""
    img = as_tensor(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"guidance needs an H×W×3 image, got shape {img.shape}")
    return (img * np.asarray(LUMA, dtype=img.dtype)).sum(axis=-1)


def grid_coordinate(n_pixels, n_cells):
    """Continuous grid coordinate of each pixel index (corners aligned)."""
    if n_pixels == 1:
        return np.zeros(1)
    return np.arange(n_pixels) / (n_pixels - 1) * (n_cells - 1)


def _split(u, n_cells):
    i0 = np.clip(np.floor(u).astype(np.intp), 0, n_cells - 2)
    return i0, (u - i0).astype(u.dtype)


def slice_grid(grid, guidance):
    """Trilinear read-out of a Gx×Gy×Gz×L grid at every pixel.

    Rows map to the first grid axis, columns to the second, and the
    guidance value J in [0, 1] to the range axis via ``J * (Gz - 1)``.
    Differentiable with respect to both the grid and the guidance.
    """
    grid = as_tensor(grid)
    guidance = as_tensor(guidance)
    gx, gy, gz, nl = grid.shape
    if min(gx, gy, gz) < 2:
        raise ValueError(f"grid dims must all be >= 2, got {grid.shape}")
    h, w = guidance.shape
    x0, fx = _split(grid_coordinate(h, gx), gx)
    y0, fy = _split(grid_coordinate(w, gy), gy)
    uz = np.clip(guidance.data, 0.0, 1.0) * (gz - 1)
    z0, fz = _split(uz, gz)

    # sparse (pixels × cells) interpolation operator, 8 entries per row
    rows = np.arange(h * w)
    cols, vals = [], []
    X0 = np.broadcast_to(x0[:, None], (h, w))
    Y0 = np.broadcast_to(y0[None, :], (h, w))
    FX = np.broadcast_to(fx[:, None], (h, w))
    FY = np.broadcast_to(fy[None, :], (h, w))
    for dx in (0, 1):
        wx = FX if dx else 1 - FX
        for dy in (0, 1):
            wy = FY if dy else 1 - FY
            for dz in (0, 1):
                wz = fz if dz else 1 - fz
                cell = ((X0 + dx) * gy + (Y0 + dy)) * gz + (z0 + dz)
                cols.append(cell.ravel())
                vals.append((wx * wy * wz).ravel())
    op = sp.csr_matrix(
        (np.concatenate(vals).astype(grid.dtype), (np.tile(rows, 8), np.concatenate(cols))),
        shape=(h * w, gx * gy * gz),
    )
    flat = grid.data.reshape(-1, nl)
    out = np.asarray(op @ flat).reshape(h, w, nl)

    def backward(g):
        g2 = g.reshape(h * w, nl)
        ggrid = np.asarray(op.T @ g2).reshape(grid.shape) if grid.requires_grad else None
        gj = None
        if guidance.requires_grad:
            # d out / d uz = bilinear(xy) of (upper z plane - lower z plane)
            dz_val = np.zeros((h, w, nl), dtype=grid.dtype)
            for dx in (0, 1):
                wx = FX if dx else 1 - FX
                for dy in (0, 1):
                    wy = FY if dy else 1 - FY
                    upper = grid.data[X0 + dx, Y0 + dy, z0 + 1]
                    lower = grid.data[X0 + dx, Y0 + dy, z0]
                    dz_val += (wx * wy)[..., None] * (upper - lower)
            inside = (guidance.data >= 0) & (guidance.data <= 1)
            gj = np.where(inside, (dz_val * g).sum(axis=-1) * (gz - 1), 0)
        return ggrid, gj

    return Tensor.node(out, (grid, guidance), backward, "slice")
