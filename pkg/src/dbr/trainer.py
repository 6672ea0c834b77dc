"""Adam training of the coefficient predictor on paired patches."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import save_checkpoint
from .config import TrainConfig, to_text
from .imageio import AugmentConfig, sample_patch
from .losses import total_loss
from .pipeline import decompose
from .predictor import init_params

log = logging.getLogger(__name__)


class NumericError(RuntimeError):
    """Raised when a loss or parameter becomes non-finite."""


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state, cfg):
    """One bias-corrected Adam update with decoupled weight decay, in place."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - cfg.beta1 ** t
    bc2 = 1.0 - cfg.beta2 ** t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter has {p.data.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m, v = state.m[name], state.v[name]
        m *= cfg.beta1
        m += (1 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1 - cfg.beta2) * (g * g)
        if cfg.weight_decay:
            p.data -= cfg.lr * cfg.weight_decay * p.data
        m_hat = m / bc1
        v_hat = v / bc2
        p.data -= (cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)).astype(p.data.dtype)


@dataclass
class TrainResult:
    params: dict
    history: list  # (iteration, total, l_r, l_n, l_e)


HISTORY_HEADER = ("iter", "total", "l_r", "l_n", "l_e")


def write_history(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTORY_HEADER)
        for it, *vals in history:
            writer.writerow([it] + [repr(float(v)) for v in vals])


def augment_config(cfg):
    return AugmentConfig(cfg.patch_size, cfg.mirror, cfg.rotate, (cfg.resize_min, cfg.resize_max), cfg.seed)


def sample_loss(params, low, ref, cfg):
    dec = decompose(low, params, cfg.pipeline)
    return total_loss(dec.reflectance, ref, dec.noise, dec.illumination, low, cfg.loss)


def train(dataset, cfg=None, checkpoint_path=None, params=None, dtype=np.float32):
    """Train from scratch (or from ``params``); deterministic given the seed.

    One epoch draws one random patch per pair in a shuffled order.
    """
    cfg = cfg or TrainConfig()
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    init_seed = int(seeds[0].generate_state(1)[0])
    rng = np.random.default_rng(seeds[1])
    layout = cfg.pipeline.layout
    if params is None:
        params = init_params(cfg.pipeline.predictor, init_seed, layout, dtype)
    aug = augment_config(cfg)
    config_text = to_text(cfg)
    state = AdamState()
    history = []
    iteration = 0
    limit = cfg.max_iterations or None
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(dataset))
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            for p in params.values():
                p.zero_grad()
            sums = np.zeros(4)
            for idx in batch:
                low, ref = sample_patch(dataset[int(idx)], aug, rng)
                parts = sample_loss(params, low, ref, cfg)
                vals = parts.values()
                if not np.all(np.isfinite(vals)):
                    raise NumericError(f"non-finite loss at iteration {iteration}: {vals}")
                (parts.total * (1.0 / len(batch))).backward()
                sums += vals
            record = sums / len(batch)
            history.append((iteration, *record))
            adam_step(params, {k: p.grad for k, p in params.items()}, state, cfg)
            for name, p in params.items():
                if not np.all(np.isfinite(p.data)):
                    raise NumericError(f"parameter {name} became non-finite at iteration {iteration}")
            iteration += 1
            if limit and iteration >= limit:
                break
        log.info("epoch %d  iter %d  loss %.5f", epoch, iteration, history[-1][1] if history else float("nan"))
        if checkpoint_path and cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(params, checkpoint_path, config_text)
        if limit and iteration >= limit:
            break
    if checkpoint_path:
        save_checkpoint(params, checkpoint_path, config_text)
    return TrainResult(params, history)
