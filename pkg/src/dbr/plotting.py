"""Figures written next to the CSV outputs (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .trainer import HISTORY_HEADER  # noqa: E402


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_history(history, path):
    """Loss terms against iteration on a log axis."""
    arr = np.asarray(history, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    if arr.size:
        for col, label in enumerate(HISTORY_HEADER[1:], start=1):
            vals = np.maximum(arr[:, col], 1e-12)
            ax.plot(arr[:, 0], vals, label=label, lw=1.2 if col == 1 else 0.8)
        ax.set_yscale("log")
        ax.legend()
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.set_title("training loss")
    fig.tight_layout()
    return _save(fig, path)


def plot_metrics(report, path):
    """One bar panel per metric, one bar per image, dashed line at the mean."""
    names = report.metrics
    ids = [row["id"] for row in report.rows]
    means = report.means()
    fig, axes = plt.subplots(1, len(names), figsize=(3.2 * len(names) + 1, 3.5), squeeze=False)
    for ax, name in zip(axes[0], names):
        vals = [row[name] for row in report.rows]
        ax.bar(range(len(vals)), vals, color="tab:blue")
        ax.axhline(means[name], color="k", ls="--", lw=1)
        ax.set_xticks(range(len(ids)))
        ax.set_xticklabels(ids, rotation=60, fontsize=7)
        ax.set_title(name)
    fig.tight_layout()
    return _save(fig, path)


def plot_decomposition(img, dec, path):
    """Input, illumination, shifted noise and reflectance side by side."""
    e, n, r = dec.arrays()
    panels = [("input I", img), ("illumination E", e), ("noise N + 0.5", n + 0.5), ("reflectance R", r)]
    fig, axes = plt.subplots(1, 4, figsize=(12, 3.4))
    for ax, (title, im) in zip(axes, panels):
        ax.imshow(np.clip(np.asarray(im, dtype=float), 0, 1))
        ax.set_title(title)
        ax.axis("off")
    fig.tight_layout()
    return _save(fig, path)
