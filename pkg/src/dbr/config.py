"""Flat ``key=value`` run configuration covering training, loss and pipeline."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .losses import LossConfig
from .pipeline import PipelineConfig
from .predictor import PredictorConfig


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 1e-8
    batch_size: int = 4
    epochs: int = 10
    max_iterations: int = 0
    patch_size: int = 64
    seed: int = 0
    checkpoint_every: int = 0
    mirror: bool = True
    rotate: bool = True
    resize_min: float = 0.75
    resize_max: float = 1.25
    loss: LossConfig = field(default_factory=LossConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")


_SECTIONS = {
    "train": TrainConfig,
    "loss": LossConfig,
    "pipeline": PipelineConfig,
    "predictor": PredictorConfig,
}
_NESTED = {"loss", "pipeline", "predictor"}


def _scalar_fields(cls):
    return [f for f in dataclasses.fields(cls) if f.name not in _NESTED]


def _key_table():
    table = {}
    for section, cls in _SECTIONS.items():
        for f in _scalar_fields(cls):
            if f.name == "channels":
                continue  # derived from the pipeline layout
            table[f.name] = (section, f)
    return table


KEYS = _key_table()


def _parse_value(key, text, default):
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("true", "1", "on", "yes"):
                return True
            if low in ("false", "0", "off", "no"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(int(v) for v in text.split(",") if v.strip())
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r} (expected {type(default).__name__})") from None


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_text(text):
    """Build a :class:`TrainConfig` from ``key=value`` lines (``#`` comments)."""
    values = {s: {} for s in _SECTIONS}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown config key: {key}")
        section, f = KEYS[key]
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        values[section][key] = _parse_value(key, raw, default)
    try:
        predictor = PredictorConfig(**values["predictor"])
        pipeline = PipelineConfig(predictor=predictor, **values["pipeline"])
        loss = LossConfig(**values["loss"])
        return TrainConfig(loss=loss, pipeline=pipeline, **values["train"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path):
    if path is None:
        return TrainConfig()
    return parse_text(Path(path).read_text(encoding="utf-8"))


def to_text(cfg):
    """Serialize every key, one ``key=value`` line, in a fixed order."""
    objects = {"train": cfg, "loss": cfg.loss, "pipeline": cfg.pipeline, "predictor": cfg.pipeline.predictor}
    lines = []
    for key, (section, _) in KEYS.items():
        lines.append(f"{key}={_format_value(getattr(objects[section], key))}")
    return "\n".join(lines) + "\n"
