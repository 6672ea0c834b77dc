"""Slow, literal reference implementations used to cross-check the fast paths.

Everything here is written with explicit loops over pixels and taps and
shares no code with the vectorized implementations.
"""

from __future__ import annotations

import math

import numpy as np


def hat(t):
    return max(1.0 - abs(t), 0.0)


def conv2d_loop(x, w, stride=1, padding="same"):
    n, c, h, wd = x.shape
    f, _, kh, kw = w.shape
    ph, pw = (kh // 2, kw // 2) if padding == "same" else (0, 0)
    ho = (h + 2 * ph - kh) // stride + 1
    wo = (wd + 2 * pw - kw) // stride + 1
    out = np.zeros((n, f, ho, wo))
    for b in range(n):
        for o in range(f):
            for i in range(ho):
                for j in range(wo):
                    acc = 0.0
                    for ch in range(c):
                        for a in range(kh):
                            for bb in range(kw):
                                r = i * stride + a - ph
                                s = j * stride + bb - pw
                                if 0 <= r < h and 0 <= s < wd:
                                    acc += x[b, ch, r, s] * w[o, ch, a, bb]
                    out[b, o, i, j] = acc
    return out


def matmul_loop(x, w):
    n, d = x.shape
    m = w.shape[1]
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            out[i, j] = sum(x[i, k] * w[k, j] for k in range(d))
    return out


def bilinear_point(img, x, y):
    """Bilinear value of ``img`` at one (x=column, y=row) position, border-clamped."""
    h, w, _ = img.shape
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    out = np.zeros(img.shape[2])
    for r in range(h):
        for s in range(w):
            wt = hat(x - s) * hat(y - r)
            if wt:
                out += wt * img[r, s]
    return out


def slice_triple_sum(grid, guidance):
    """Literal trilinear-hat sum over every grid cell for every pixel."""
    gx, gy, gz, nl = grid.shape
    h, w = guidance.shape
    out = np.zeros((h, w, nl))
    for px in range(h):
        ux = px / (h - 1) * (gx - 1) if h > 1 else 0.0
        for py in range(w):
            uy = py / (w - 1) * (gy - 1) if w > 1 else 0.0
            uz = min(max(guidance[px, py], 0.0), 1.0) * (gz - 1)
            acc = np.zeros(nl)
            for i in range(gx):
                for j in range(gy):
                    for k in range(gz):
                        wt = hat(ux - i) * hat(uy - j) * hat(uz - k)
                        if wt:
                            acc += wt * grid[i, j, k]
            out[px, py] = acc
    return out


def deformable_loop(img, kernels, offsets):
    """Per-pixel sum over taps of ``W_{p,q} @ img(q + delta)``."""
    h, w, _ = img.shape
    taps = kernels.shape[2]
    k = int(round(math.sqrt(taps)))
    r = k // 2
    out = np.zeros((h, w, 3))
    for py in range(h):
        for px in range(w):
            acc = np.zeros(3)
            t = 0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    ox, oy = (0.0, 0.0) if offsets is None else offsets[py, px, t]
                    sample = bilinear_point(img, px + dx + ox, py + dy + oy)
                    acc += kernels[py, px, t] @ sample
                    t += 1
            out[py, px] = acc
    return out


def grad_loop(x):
    """Forward differences (gx along columns, gy along rows) with zero last line."""
    h, w, c = x.shape
    gx = np.zeros_like(x)
    gy = np.zeros_like(x)
    for i in range(h):
        for j in range(w):
            if j + 1 < w:
                gx[i, j] = x[i, j + 1] - x[i, j]
            if i + 1 < h:
                gy[i, j] = x[i + 1, j] - x[i, j]
    return gx, gy


def gaussian_2d(sigma, radius):
    k = np.zeros((2 * radius + 1, 2 * radius + 1))
    for a in range(-radius, radius + 1):
        for b in range(-radius, radius + 1):
            k[a + radius, b + radius] = math.exp(-(a * a + b * b) / (2 * sigma * sigma)) / (2 * math.pi * sigma * sigma)
    return k / k.sum()


def blur_loop(x, sigma, radius):
    """2-D weighted sum over the truncated window with replicate borders."""
    h, w, c = x.shape
    k = gaussian_2d(sigma, radius)
    out = np.zeros_like(x)
    for i in range(h):
        for j in range(w):
            for a in range(-radius, radius + 1):
                for b in range(-radius, radius + 1):
                    r = min(max(i + a, 0), h - 1)
                    s = min(max(j + b, 0), w - 1)
                    out[i, j] += k[a + radius, b + radius] * x[r, s]
    return out


def reflectance_loss_loop(pred, target, lambda_g):
    h, w, c = pred.shape
    inten = sum(abs(pred[i, j, ch] - target[i, j, ch]) for i in range(h) for j in range(w) for ch in range(c))
    pgx, pgy = grad_loop(pred)
    tgx, tgy = grad_loop(target)
    gsum = 0.0
    for i in range(h):
        for j in range(w):
            for ch in range(c):
                gsum += abs(pgx[i, j, ch] - tgx[i, j, ch]) + abs(pgy[i, j, ch] - tgy[i, j, ch])
    n = h * w * c
    return inten / n + lambda_g * gsum / (2 * n)


def noise_loss_loop(noise, sigma, radius):
    gx, gy = grad_loop(noise)
    bx, by = blur_loop(gx, sigma, radius), blur_loop(gy, sigma, radius)
    h, w, c = noise.shape
    total = 0.0
    for i in range(h):
        for j in range(w):
            total += sum(abs(bx[i, j, ch]) + abs(by[i, j, ch]) for ch in range(c))
    return total / (h * w)


def illum_loss_loop(illum, img, theta, eps):
    ex, ey = grad_loop(illum)
    ix, iy = grad_loop(img)
    h, w, c = illum.shape
    total = 0.0
    for i in range(h):
        for j in range(w):
            num = sum(abs(ex[i, j, ch]) + abs(ey[i, j, ch]) for ch in range(c))
            den = sum(abs(ix[i, j, ch]) + abs(iy[i, j, ch]) for ch in range(c)) ** theta + eps
            total += num / den
    return total / (h * w)


def psnr_direct(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    mse = math.fsum((a - b) ** 2 for a, b in zip(x, y)) / x.size
    return 99.0 if mse == 0 else 10 * math.log10(1 / mse)


def ssim_constant_images(a, b, c1=1e-4, c2=9e-4):
    """SSIM of two constant images: only the luminance term differs from 1."""
    return (2 * a * b + c1) / (a * a + b * b + c1)


def loe_loop(original, enhanced):
    """O(m²) lightness order error on full-resolution lightness maps."""
    la = [max(px) for row in np.asarray(original) for px in row]
    lb = [max(px) for row in np.asarray(enhanced) for px in row]
    m = len(la)
    errs = 0
    for x in range(m):
        for y in range(m):
            errs += (la[x] >= la[y]) != (lb[x] >= lb[y])
    return errs / m


def bilinear_resize_loop(img, out_h, out_w):
    """Half-pixel-centre bilinear resize written pixel by pixel."""
    h, w, c = img.shape
    out = np.zeros((out_h, out_w, c))
    for i in range(out_h):
        sy = min(max((i + 0.5) * h / out_h - 0.5, 0.0), h - 1.0)
        for j in range(out_w):
            sx = min(max((j + 0.5) * w / out_w - 0.5, 0.0), w - 1.0)
            out[i, j] = bilinear_point(img, sx, sy)
    return out
