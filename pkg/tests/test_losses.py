import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbr import oracles
from dbr.autodiff import Tensor, grad_check
from dbr.losses import LossConfig, loss_illum, loss_noise, loss_reflectance, ssim_tensor, total_loss
from dbr.metrics import ssim

CFG = LossConfig()


def rand(seed, shape=(6, 6, 3), lo=0.0, hi=1.0):
    return np.random.default_rng(seed).uniform(lo, hi, shape)


def kink_free(seed, shape=(6, 6, 3), margin=1e-3):
    rng = np.random.default_rng(seed)
    while True:
        x = rng.uniform(size=shape)
        if min(np.abs(np.diff(x, axis=0)).min(), np.abs(np.diff(x, axis=1)).min()) > margin:
            return x


def test_config_validation():
    with pytest.raises(ValueError):
        LossConfig(lambda_n=-1)
    with pytest.raises(ValueError):
        LossConfig(epsilon=0)
    with pytest.raises(ValueError):
        LossConfig(sigma=0.05)
    with pytest.raises(ValueError):
        LossConfig(grad_term="l2")


# -- reflectance -----------------------------------------------------------------

def test_reflectance_zero_and_shift():
    r = rand(0)
    assert float(loss_reflectance(r, r, CFG).data) == 0.0
    assert float(loss_reflectance(r + 0.1, r, CFG).data) == pytest.approx(0.1, abs=1e-15)


def test_reflectance_matches_formula():
    a, b = rand(1, (4, 4, 3)), rand(2, (4, 4, 3))
    assert abs(float(loss_reflectance(a, b, CFG).data) - oracles.reflectance_loss_loop(a, b, 0.1)) < 1e-10


def test_reflectance_shape_mismatch():
    with pytest.raises(ValueError):
        loss_reflectance(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)), CFG)


def test_reflectance_switches():
    a, b = rand(3, (12, 12, 3)), rand(4, (12, 12, 3))
    l1 = np.abs(a - b).mean()
    assert float(loss_reflectance(a, b, LossConfig(grad_term="none")).data) == pytest.approx(l1, abs=1e-15)
    with_ssim = float(loss_reflectance(a, b, LossConfig(grad_term="ssim")).data)
    assert with_ssim == pytest.approx(l1 + 0.1 * (1 - ssim(a, b)), abs=1e-12)


def test_ssim_tensor_matches_metric():
    a, b = rand(5, (14, 13, 3)), rand(6, (14, 13, 3))
    assert float(ssim_tensor(Tensor(a), Tensor(b)).data) == pytest.approx(ssim(a, b), abs=1e-12)


# -- noise -----------------------------------------------------------------------

def test_noise_constant_and_zero():
    assert float(loss_noise(np.full((6, 6, 3), 0.3), CFG).data) == 0.0
    assert float(loss_noise(np.zeros((6, 6, 3)), CFG).data) == 0.0


def test_noise_matches_double_loop():
    n = np.random.default_rng(7).standard_normal((6, 6, 3))
    assert abs(float(loss_noise(n, CFG).data) - oracles.noise_loss_loop(n, 1.0, 2)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.floats(0, 10))
def test_noise_positive_homogeneity(seed, s):
    n = np.random.default_rng(seed).standard_normal((5, 5, 3))
    base = float(loss_noise(n, CFG).data)
    assert float(loss_noise(s * n, CFG).data) == pytest.approx(s * base, rel=1e-12, abs=1e-15)


# -- illumination ----------------------------------------------------------------

def test_illum_constant_is_zero():
    assert float(loss_illum(np.full((5, 5, 3), 0.6), rand(8, (5, 5, 3)), CFG).data) == 0.0


def test_illum_single_pixel_pair():
    e = np.array([[[0.0], [0.1]]])
    i = np.zeros((1, 2, 1))
    # first pixel contributes 0.1 / 1e-4 = 1000, the second 0; mean over 2 pixels
    assert float(loss_illum(e, i, CFG).data) == pytest.approx(500.0, rel=1e-12)


def test_illum_matches_formula():
    e, i = rand(9), rand(10, lo=0, hi=0.3)
    assert abs(float(loss_illum(e, i, CFG).data) - oracles.illum_loss_loop(e, i, 1.2, 1e-4)) < 1e-10


def test_illum_weight_is_detached():
    e = Tensor(kink_free(11), requires_grad=True)
    i = Tensor(rand(12), requires_grad=True)
    loss_illum(e, i, CFG).backward()
    assert e.grad is not None and i.grad is None


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.floats(-2, 2))
def test_illum_shift_invariant(seed, c):
    e, i = rand(seed), rand(seed + 1)
    a = float(loss_illum(e, i, CFG).data)
    b = float(loss_illum(e + c, i, CFG).data)
    assert b == pytest.approx(a, rel=1e-9)


def test_illum_l2_switch():
    e, i = rand(13), rand(14)
    ex = np.diff(e, axis=1, append=e[:, -1:])
    ey = np.diff(e, axis=0, append=e[-1:])
    ix = np.diff(i, axis=1, append=i[:, -1:])
    iy = np.diff(i, axis=0, append=i[-1:])
    w = 1 / ((np.abs(ix) + np.abs(iy)).sum(-1) ** 1.2 + 1e-4)
    expected = ((ex ** 2 + ey ** 2).sum(-1) * w).mean()
    assert float(loss_illum(e, i, LossConfig(illum_norm="l2")).data) == pytest.approx(expected, rel=1e-12)


# -- totals ----------------------------------------------------------------------

def test_total_perfect_prediction():
    r = rand(15)
    parts = total_loss(r, r, np.full_like(r, 0.2), np.full_like(r, 0.9), rand(16), CFG)
    assert parts.values() == (0.0, 0.0, 0.0, 0.0)


def test_total_without_priors_is_reflectance():
    args = rand(17), rand(18), rand(19), rand(20), rand(21)
    parts = total_loss(*args, LossConfig(lambda_n=0, lambda_e=0))
    assert parts.values()[0] == parts.values()[1]


def test_total_is_weighted_sum():
    pred, ref, n, e, i = rand(22), rand(23), rand(24) - 0.5, rand(25), rand(26)
    cfg = LossConfig(lambda_n=0.7, lambda_e=0.3)
    parts = total_loss(pred, ref, n, e, i, cfg)
    expected = (oracles.reflectance_loss_loop(pred, ref, 0.1)
                + 0.7 * oracles.noise_loss_loop(n, 1.0, 2)
                + 0.3 * oracles.illum_loss_loop(e, i, 1.2, 1e-4))
    total, l_r, l_n, l_e = parts.values()
    assert abs(total - expected) < 1e-9
    assert abs(total - (l_r + 0.7 * l_n + 0.3 * l_e)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_losses_nonnegative(seed):
    rng = np.random.default_rng(seed)
    args = [rng.standard_normal((5, 5, 3)) for _ in range(5)]
    assert min(total_loss(*args, CFG).values()) >= 0


def test_loss_gradients():
    pred, ref = kink_free(27), rand(28)
    assert grad_check(lambda p: loss_reflectance(p, ref, CFG), [pred]).passed
    n = np.random.default_rng(29).standard_normal((6, 6, 3))
    assert grad_check(lambda x: loss_noise(x, CFG), [n]).passed
    e, i = kink_free(30), rand(31)
    assert grad_check(lambda x: loss_illum(x, i, CFG), [e]).passed
    big = rand(32, (12, 12, 3))
    assert grad_check(lambda x: ssim_tensor(x, Tensor(rand(33, (12, 12, 3)))), [big], probes=40).passed
