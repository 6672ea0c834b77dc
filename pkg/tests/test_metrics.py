import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.metrics import structural_similarity

from dbr import oracles
from dbr.imageio import Pair, PairedDataset
from dbr.metrics import MetricReport, evaluate, loe, psnr, ssim


def rand(seed, shape=(16, 16, 3)):
    return np.random.default_rng(seed).uniform(size=shape)


def quantized(seed, shape=(16, 16, 3)):
    return np.random.default_rng(seed).integers(0, 256, shape) / 255.0


# -- psnr ------------------------------------------------------------------------

def test_psnr_sentinel():
    x = rand(0)
    assert psnr(x, x) == 99.0


def test_psnr_constant_offset():
    x = np.full((8, 8, 3), 0.3)
    assert psnr(x, x + 0.1) == pytest.approx(20.0, abs=1e-9)


def test_psnr_matches_direct_formula():
    x, y = rand(1), rand(2)
    assert abs(psnr(x, y) - oracles.psnr_direct(x, y)) < 1e-9


def test_psnr_symmetric():
    x, y = rand(3), rand(4)
    assert psnr(x, y) == psnr(y, x)


# -- ssim ------------------------------------------------------------------------

def test_ssim_identical():
    x = rand(5)
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)


def test_ssim_equal_constants():
    a = np.full((16, 16, 3), 0.5)
    assert ssim(a, a.copy()) == 1.0


# (2·0.2·0.8 + C1) / (0.2² + 0.8² + C1) with C1 = 1e-4, frozen
SSIM_02_08 = 0.47066607851786502


def test_ssim_closed_form_constants():
    a, b = np.full((16, 16, 3), 0.2), np.full((16, 16, 3), 0.8)
    assert SSIM_02_08 == pytest.approx(oracles.ssim_constant_images(0.2, 0.8), abs=1e-15)
    assert abs(ssim(a, b) - SSIM_02_08) < 1e-9


def test_ssim_matches_scikit_image():
    x, y = rand(6, (24, 20, 3)), rand(7, (24, 20, 3))
    ref = structural_similarity(x, y, gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
                                data_range=1.0, channel_axis=-1)
    assert abs(ssim(x, y) - ref) < 1e-9


def test_ssim_symmetric_and_bounded():
    x, y = rand(8), rand(9)
    assert abs(ssim(x, y) - ssim(y, x)) < 1e-9
    assert -1 <= ssim(x, y) <= 1


def test_ssim_too_small():
    with pytest.raises(ValueError):
        ssim(np.zeros((8, 8, 3)), np.zeros((8, 8, 3)))


# -- loe -------------------------------------------------------------------------

def test_loe_identity():
    x = rand(10)
    assert loe(x, x) == 0.0


def test_loe_two_pixel_swap():
    a = np.array([[[0.2, 0.2, 0.2], [0.8, 0.8, 0.8]]])
    b = np.array([[[0.8, 0.8, 0.8], [0.2, 0.2, 0.2]]])
    assert loe(a, b) == 1.0


def test_loe_matches_brute_force():
    x, y = rand(11, (8, 8, 3)), rand(12, (8, 8, 3))
    assert abs(loe(x, y) - oracles.loe_loop(x, y)) < 1e-9


def test_loe_chunking_does_not_matter():
    x, y = rand(13, (30, 30, 3)), rand(14, (30, 30, 3))
    assert loe(x, y, chunk=7) == loe(x, y, chunk=10_000)


def test_loe_subsamples_large_images():
    x, y = rand(15, (250, 130, 3)), rand(16, (250, 130, 3))
    rows = (np.arange(100) * 250) // 100
    cols = np.arange(130)[(np.arange(100) * 130) // 100]
    sub_x, sub_y = x[np.ix_(rows, cols)], y[np.ix_(rows, cols)]
    assert loe(x, y) == loe(sub_x, sub_y)


def test_loe_dimension_mismatch():
    with pytest.raises(ValueError):
        loe(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))


@pytest.mark.parametrize("seed", range(20))
def test_loe_affine_brightening_is_zero(seed):
    x = quantized(100 + seed, (20, 20, 3))
    assert loe(x, 0.5 * x + 0.1) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.floats(0.1, 0.9))
def test_loe_monotone_remap(seed, gamma):
    x = quantized(seed, (10, 10, 3))
    assert loe(x, x ** gamma) == 0.0


# -- evaluate --------------------------------------------------------------------

def dataset(n=3, same=True):
    pairs = []
    for i in range(n):
        low = rand(20 + i)
        pairs.append(Pair(low, low.copy() if same else rand(40 + i), f"{i:02d}"))
    return PairedDataset(pairs)


def test_identity_enhancer_on_identical_pairs():
    rep = evaluate(dataset(), lambda low: low)
    for row in rep.rows:
        assert row["psnr"] == 99.0 and row["ssim"] == pytest.approx(1.0) and row["loe"] == 0.0


def test_empty_metric_list():
    with pytest.raises(ValueError):
        evaluate(dataset(), lambda low: low, [])
    with pytest.raises(ValueError):
        evaluate(dataset(), lambda low: low, ["niqe"])


def test_means_are_arithmetic_means():
    rep = evaluate(dataset(4, same=False), lambda low: np.clip(low * 1.5, 0, 1))
    for m in rep.metrics:
        assert rep.means()[m] == pytest.approx(sum(r[m] for r in rep.rows) / 4, abs=1e-12)


def test_csv_layout():
    rep = evaluate(dataset(2, same=False), lambda low: low, ["psnr"])
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "id,psnr_db"
    assert [l.split(",")[0] for l in lines] == ["id", "00", "01", "MEAN"]
    assert all(len(l.split(",")) == 2 for l in lines)
    assert rep.mean_line() == lines[-1]


def test_report_empty_rows():
    assert MetricReport(("psnr",)).to_csv().splitlines()[0] == "id,psnr_db"
