"""Deterministic color mapping, closed-form fitting, and the relight pipeline."""

import numpy as np
import pytest

from curvedbev.metrics import psnr, ssim
from curvedbev.relight import (
    ColorStats,
    ColorTransform,
    DncmParams,
    apply_dncm,
    compute_color_stats,
    default_identity_params,
    fit_style_transform,
    identity_transform,
    normalize_content,
    relight,
)

from conftest import make_natural_image

PARAMS = default_identity_params(32)


def test_params_validation():
    with pytest.raises(ValueError):
        DncmParams(k=2, P=np.zeros((3, 2)), Q=np.zeros((2, 3)))
    with pytest.raises(ValueError):
        DncmParams(k=4, P=np.zeros((3, 3)), Q=np.zeros((4, 3)))
    with pytest.raises(ValueError):
        DncmParams(k=4, P=np.full((3, 4), np.nan), Q=np.zeros((4, 3)))


def test_identity_params_compose_to_identity():
    p = default_identity_params(32)
    assert np.array_equal(p.P @ np.eye(32) @ p.Q, np.eye(3))


def test_params_json_round_trip():
    text = PARAMS.to_json()
    back = DncmParams.from_json(text)
    assert back.k == 32
    assert np.array_equal(back.P, PARAMS.P)
    assert np.array_equal(back.Q, PARAMS.Q)
    t = ColorTransform(T=np.arange(16.0).reshape(4, 4))
    back_t = ColorTransform.from_json(t.to_json())
    assert np.array_equal(back_t.T, t.T)


def test_identity_pipeline_is_bit_exact(natural_image):
    out = apply_dncm(natural_image, PARAMS, identity_transform(32))
    assert np.array_equal(out, natural_image)


def test_halved_transform_halves_pixels(natural_image):
    out = apply_dncm(natural_image, PARAMS, ColorTransform(T=0.5 * np.eye(32)))
    assert np.abs(out - natural_image / 2.0).max() == 0.0


def test_zero_transform_blacks_out(natural_image):
    out = apply_dncm(natural_image, PARAMS, ColorTransform(T=np.zeros((32, 32))))
    assert (out == 0.0).all()


def test_k_mismatch_rejected(natural_image):
    with pytest.raises(ValueError):
        apply_dncm(natural_image, PARAMS, identity_transform(16))


def test_uint8_input_rejected():
    img = np.zeros((8, 8, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        apply_dncm(img, PARAMS, identity_transform(32))


def test_linearity_before_clamping(natural_image):
    t = ColorTransform(T=0.8 * np.eye(32))
    for alpha in (0.25, 0.5, 1.0):
        a = apply_dncm(alpha * natural_image, PARAMS, t)
        b = alpha * apply_dncm(natural_image, PARAMS, t)
        assert np.allclose(a, b, atol=1e-12)


def test_pixel_independence_under_permutation(natural_image):
    t = ColorTransform(T=0.7 * np.eye(32))
    rng = np.random.default_rng(0)
    perm = rng.permutation(natural_image.shape[0])
    a = apply_dncm(natural_image[perm], PARAMS, t)
    b = apply_dncm(natural_image, PARAMS, t)[perm]
    assert np.array_equal(a, b)


def test_self_transfer_reproduces_content(natural_image):
    t = fit_style_transform(natural_image, natural_image, PARAMS)
    out = apply_dncm(natural_image, PARAMS, t)
    assert psnr(out, natural_image, peak=1.0) >= 35.0


def test_diagonal_gain_recovery(natural_image):
    gains = np.array([0.8, 1.0, 1.2])
    reference = np.clip(natural_image * gains, 0.0, 1.0)
    t = fit_style_transform(natural_image, reference, PARAMS)
    out = apply_dncm(natural_image, PARAMS, t)
    assert psnr(out, reference, peak=1.0) >= 35.0


def test_constant_content_matches_reference_mean(natural_image):
    gray = np.full((64, 64, 3), 0.5)
    with pytest.warns(UserWarning):
        t = fit_style_transform(gray, natural_image, PARAMS)
    out = apply_dncm(gray, PARAMS, t)
    ref_mean = natural_image.reshape(-1, 3).mean(axis=0)
    assert np.ptp(out.reshape(-1, 3), axis=0).max() < 1e-9
    assert np.allclose(out.reshape(-1, 3)[0], ref_mean, atol=2e-3)


def test_invalid_ridge_rejected(natural_image):
    with pytest.raises(ValueError):
        fit_style_transform(natural_image, natural_image, PARAMS, ridge=0.0)


def test_color_stats_shape_and_psd(natural_image):
    stats = compute_color_stats(natural_image, PARAMS)
    assert stats.mean.shape == (32,)
    assert stats.cov.shape == (32, 32)
    assert np.allclose(stats.cov, stats.cov.T)
    assert np.linalg.eigvalsh(stats.cov).min() >= -1e-12


def test_normalize_is_fixed_point_at_canonical(natural_image):
    canonical = compute_color_stats(natural_image, PARAMS)
    out = normalize_content(natural_image, canonical, PARAMS)
    assert np.abs(out - natural_image).mean() <= 1.0 / 255.0


def test_normalize_corrects_brightness(natural_image):
    canonical = compute_color_stats(natural_image, PARAMS)
    dimmed = np.clip(natural_image * 0.5, 0.0, 1.0)
    out = normalize_content(dimmed, canonical, PARAMS)
    assert abs(out.mean() - natural_image.mean()) <= 1.0 / 255.0


def test_normalize_constant_image_lands_on_canonical_mean(natural_image):
    canonical = compute_color_stats(natural_image, PARAMS)
    gray = np.full((32, 32, 3), 0.2)
    with pytest.warns(UserWarning):
        out = normalize_content(gray, canonical, PARAMS)
    target = natural_image.reshape(-1, 3).mean(axis=0)
    assert np.ptp(out.reshape(-1, 3), axis=0).max() < 1e-9
    assert np.allclose(out.reshape(-1, 3)[0], target, atol=2e-3)


def test_relight_self_transfer(natural_image):
    canonical = compute_color_stats(natural_image, PARAMS)
    reference = make_natural_image(seed=1)  # same lighting family
    out = relight(natural_image, reference, canonical, PARAMS)
    assert out.shape == natural_image.shape
    assert ssim(out, natural_image) >= 0.95


def test_relight_matches_dim_reference_luminance(natural_image):
    canonical = compute_color_stats(natural_image, PARAMS)
    dim_ref = np.clip(natural_image * 0.6, 0.0, 1.0)
    out = relight(natural_image, dim_ref, canonical, PARAMS)
    assert abs(out.mean() - dim_ref.mean()) <= 2.0 / 255.0


def test_relight_idempotent(natural_image):
    canonical = compute_color_stats(natural_image, PARAMS)
    dim_ref = np.clip(natural_image * 0.6, 0.0, 1.0)
    once = relight(natural_image, dim_ref, canonical, PARAMS)
    twice = relight(once, dim_ref, canonical, PARAMS)
    assert np.abs(once - twice).mean() <= 2.0 / 255.0


def test_relight_preserves_dimensions():
    img = make_natural_image(size=96, seed=4)
    ref = make_natural_image(size=64, seed=5)
    canonical = compute_color_stats(img, PARAMS)
    out = relight(img, ref, canonical, PARAMS)
    assert out.shape == (96, 96, 3)


def test_color_stats_validation():
    with pytest.raises(ValueError):
        ColorStats(mean=np.zeros(4), cov=np.zeros((3, 3)), thumb=64)
    with pytest.raises(ValueError):
        ColorStats(mean=np.full(3, np.inf), cov=np.zeros((3, 3)), thumb=64)
