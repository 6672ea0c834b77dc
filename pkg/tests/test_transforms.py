import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbr import oracles
from dbr.autodiff import grad_check
from dbr.transforms import (
    affine_noise,
    affine_raw,
    constrain_illum,
    deformable_conv,
    map_offsets,
    normalize_kernels,
    rigid_conv,
)


def affine_field(h, w, m):
    return np.broadcast_to(np.asarray(m, dtype=float), (h, w, 3, 4)).copy()


# -- affine --------------------------------------------------------------------

def test_affine_identity():
    img = np.broadcast_to([0.2, 0.4, 0.6], (2, 3, 3)).copy()
    a = affine_field(2, 3, np.hstack([np.eye(3), np.zeros((3, 1))]))
    np.testing.assert_allclose(affine_raw(a, img).data, img, atol=1e-15)


def test_affine_bias_only_and_zero():
    img = np.random.default_rng(0).uniform(size=(2, 2, 3))
    b = np.array([0.1, 0.5, 0.9])
    a = affine_field(2, 2, np.hstack([np.zeros((3, 3)), b[:, None]]))
    np.testing.assert_array_equal(affine_raw(a, img).data, np.broadcast_to(b, (2, 2, 3)))
    assert not affine_raw(np.zeros((2, 2, 3, 4)), img).data.any()


def test_affine_matches_per_pixel_matvec():
    rng = np.random.default_rng(1)
    a, img = rng.standard_normal((3, 4, 3, 4)), rng.uniform(size=(3, 4, 3))
    expected = np.array([[a[i, j] @ np.append(img[i, j], 1.0) for j in range(4)] for i in range(3)])
    np.testing.assert_allclose(affine_raw(a, img).data, expected, atol=1e-14)
    np.testing.assert_array_equal(affine_noise(a, img).data, affine_raw(a, img).data)


def test_affine_shape_mismatch():
    with pytest.raises(ValueError):
        affine_raw(np.zeros((2, 2, 3, 3)), np.zeros((2, 2, 3)))


# -- illumination constraint ---------------------------------------------------

def test_smooth_reparam_examples():
    img = np.full((1, 1, 3), 0.5)
    assert constrain_illum(np.zeros((1, 1, 3)), img, "smooth_reparam").data[0, 0, 0] == 0.75
    assert constrain_illum(np.full((1, 1, 3), 50.0), img, "smooth_reparam").data[0, 0, 0] == pytest.approx(1.0)
    low = np.full((1, 1, 3), 0.3)
    assert constrain_illum(np.full((1, 1, 3), -50.0), low, "smooth_reparam").data[0, 0, 0] == pytest.approx(0.3)


def test_hard_clamp_examples():
    img = np.array([[[0.2, 0.5, 0.0]]])
    e = constrain_illum(np.array([[[0.1, 2.0, -1.0]]]), img, "hard_clamp").data
    np.testing.assert_allclose(e, [[[0.2, 1.0, 1e-4]]])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["smooth_reparam", "hard_clamp"]), st.floats(0.1, 50))
def test_illum_bounds(seed, mode, scale):
    rng = np.random.default_rng(seed)
    img = rng.uniform(size=(4, 4, 3))
    img[0, 0] = 0.0
    e = constrain_illum(rng.standard_normal((4, 4, 3)) * scale, img, mode).data
    assert np.all(e >= img) and np.all(e <= 1.0) and np.all(e >= 1e-4)


# -- offsets -------------------------------------------------------------------

def test_map_offsets_examples():
    assert map_offsets(np.array([0.0]), 15).data[0] == 0.0
    assert map_offsets(np.array([60.0]), 15).data[0] == pytest.approx(15.0)
    assert map_offsets(np.array([math.log(3)]), 15).data[0] == pytest.approx(7.5, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(-30, 30), st.floats(1, 40))
def test_offsets_bounded(raw, window):
    assert abs(map_offsets(np.array([raw]), window).data[0]) <= window


# -- kernel normalization ------------------------------------------------------

def test_zero_mean_examples():
    equal = np.full((1, 1, 9, 3, 3), 0.3)
    np.testing.assert_allclose(normalize_kernels(equal).data, 0, atol=1e-16)
    k = np.zeros((1, 1, 9, 3, 3))
    k[0, 0, 0, 1, 2] = 1.0
    out = normalize_kernels(k).data[0, 0, :, 1, 2]
    np.testing.assert_allclose(out, [8 / 9] + [-1 / 9] * 8, atol=1e-16)


def test_softmax_of_equal_taps():
    out = normalize_kernels(np.full((2, 2, 9, 3, 3), -0.4), "softmax").data
    np.testing.assert_allclose(out, 1 / 9, atol=1e-16)


def test_softmax_convex_rows_sum_to_one():
    k = np.random.default_rng(2).standard_normal((2, 3, 9, 3, 3))
    out = normalize_kernels(k, "softmax_convex").data
    # each output channel: sum over taps and input channels is 1
    np.testing.assert_allclose(out.sum(axis=(2, 4)), 1.0, atol=1e-14)


def test_unknown_normalization():
    with pytest.raises(ValueError):
        normalize_kernels(np.zeros((1, 1, 9, 3, 3)), "l2")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_zero_mean_invariant(seed):
    k = np.random.default_rng(seed).standard_normal((3, 3, 9, 3, 3)) * 5
    assert np.abs(normalize_kernels(k).data.sum(axis=2)).max() < 1e-6


# -- deformable convolution ----------------------------------------------------

def test_constant_image_annihilated():
    rng = np.random.default_rng(3)
    img = np.full((6, 6, 3), 0.42)
    k = normalize_kernels(rng.standard_normal((6, 6, 9, 3, 3))).data
    offs = map_offsets(rng.standard_normal((6, 6, 9, 2)) * 4, 15).data
    assert np.abs(deformable_conv(img, k, offs).data).max() < 1e-6
    assert np.abs(rigid_conv(img, k).data).max() < 1e-6


def test_centre_tap_only_gives_matvec():
    rng = np.random.default_rng(4)
    img = rng.uniform(size=(5, 5, 3))
    m = rng.standard_normal((3, 3))
    k = np.zeros((5, 5, 9, 3, 3))
    k[:, :, 4] = m
    out = deformable_conv(img, k, np.zeros((5, 5, 9, 2))).data
    np.testing.assert_allclose(out, img @ m.T, atol=1e-14)


def test_rigid_equals_zero_offsets():
    rng = np.random.default_rng(5)
    img = rng.uniform(size=(5, 6, 3))
    k = rng.standard_normal((5, 6, 9, 3, 3))
    zero = map_offsets(np.zeros((5, 6, 9, 2)), 15).data
    np.testing.assert_array_equal(rigid_conv(img, k).data, deformable_conv(img, k, zero).data)


def test_matches_loop_oracle():
    rng = np.random.default_rng(6)
    img = rng.uniform(size=(8, 8, 3))
    k = normalize_kernels(rng.standard_normal((8, 8, 9, 3, 3))).data
    offs = map_offsets(rng.standard_normal((8, 8, 9, 2)), 15).data
    assert np.abs(deformable_conv(img, k, offs).data - oracles.deformable_loop(img, k, offs)).max() < 1e-10
    assert np.abs(rigid_conv(img, k).data - oracles.deformable_loop(img, k, None)).max() < 1e-10


def test_kernel_size_five():
    rng = np.random.default_rng(7)
    img = rng.uniform(size=(6, 6, 3))
    k = rng.standard_normal((6, 6, 25, 3, 3))
    offs = rng.uniform(-2, 2, (6, 6, 25, 2))
    assert np.abs(deformable_conv(img, k, offs).data - oracles.deformable_loop(img, k, offs)).max() < 1e-10


def test_shape_errors():
    with pytest.raises(ValueError):
        deformable_conv(np.zeros((4, 4, 3)), np.zeros((4, 4, 8, 3, 3)))
    with pytest.raises(ValueError):
        deformable_conv(np.zeros((4, 4, 3)), np.zeros((4, 4, 9, 3, 3)), np.zeros((4, 4, 9, 3)))


def test_deformable_gradients():
    rng = np.random.default_rng(8)
    img = rng.uniform(size=(5, 5, 3))
    k = rng.standard_normal((5, 5, 9, 3, 3))
    # offsets at least 0.1 away from integer grid lines
    offs = rng.integers(-2, 2, (5, 5, 9, 2)) + rng.uniform(0.1, 0.9, (5, 5, 9, 2))
    rep = grad_check(lambda i, kk, o: deformable_conv(i, normalize_kernels(kk), o), [img, k, offs], probes=60)
    assert rep.passed, rep.line()


def test_illum_gradients():
    rng = np.random.default_rng(9)
    img = rng.uniform(0.1, 0.5, (3, 3, 3))
    raw = rng.standard_normal((3, 3, 3))
    assert grad_check(lambda r: constrain_illum(r, img, "smooth_reparam"), [raw]).passed
    raw = np.where(np.abs(raw - img) < 0.05, raw + 0.1, raw)
    raw = np.where(np.abs(raw - 1) < 0.05, raw + 0.1, raw)
    assert grad_check(lambda r: constrain_illum(r, img, "hard_clamp"), [raw]).passed
