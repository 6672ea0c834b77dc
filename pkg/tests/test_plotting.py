import numpy as np
from PIL import Image

from dbr.imageio import Pair, PairedDataset
from dbr.metrics import evaluate
from dbr.pipeline import PipelineConfig, decompose
from dbr.plotting import plot_decomposition, plot_history, plot_metrics
from dbr.predictor import init_params
from dbr.selftest import tiny_predictor


def is_png(path):
    with Image.open(path) as im:
        return im.format == "PNG" and im.size[0] > 100


def test_history_plot(tmp_path):
    hist = [(i, 1.0 / (i + 1), 0.5 / (i + 1), 0.0, 0.1) for i in range(20)]
    assert is_png(plot_history(hist, tmp_path / "sub" / "h.png"))


def test_history_plot_empty(tmp_path):
    assert is_png(plot_history([], tmp_path / "h.png"))


def test_metrics_plot(tmp_path):
    rng = np.random.default_rng(0)
    ds = PairedDataset([Pair(rng.uniform(size=(16, 16, 3)), rng.uniform(size=(16, 16, 3)), str(i)) for i in range(3)])
    rep = evaluate(ds, lambda x: x)
    assert is_png(plot_metrics(rep, tmp_path / "m.png"))


def test_decomposition_plot(tmp_path):
    cfg = PipelineConfig(predictor=tiny_predictor())
    img = np.random.default_rng(1).uniform(size=(12, 12, 3))
    dec = decompose(img, init_params(cfg.predictor, 0, cfg.layout, np.float64), cfg)
    assert is_png(plot_decomposition(img, dec, tmp_path / "d.png"))


def test_plot_bytes_deterministic(tmp_path):
    hist = [(i, 2.0 - 0.1 * i, 1.0, 0.5, 0.5) for i in range(10)]
    a = plot_history(hist, tmp_path / "a.png").read_bytes()
    b = plot_history(hist, tmp_path / "b.png").read_bytes()
    assert a == b
