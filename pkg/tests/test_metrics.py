"""MSE/PSNR/SSIM correctness and the paired-evaluation report."""

import json
import math

import numpy as np
import pytest

from curvedbev.dataset import ManifestEntry
from curvedbev.images import save_image
from curvedbev.metrics import evaluate_pairs, mse, psnr, ssim

from conftest import make_natural_image, to_uint8


def test_psnr_identical_is_infinite(natural_image):
    img = to_uint8(natural_image)
    assert psnr(img, img) == math.inf
    assert psnr(img, img, cap=99.0) == 99.0


def test_psnr_uniform_offset_matches_closed_form():
    base = np.full((32, 32, 3), 100, dtype=np.uint8)
    shifted = base + np.uint8(16)
    assert mse(base, shifted) == 256.0
    expected = 10.0 * math.log10(255.0 ** 2 / 256.0)
    assert psnr(base, shifted) == pytest.approx(expected, abs=1e-3)


def test_psnr_translation_consistency():
    rng = np.random.default_rng(0)
    base = rng.integers(0, 200, size=(24, 24, 3)).astype(np.uint8)
    for offset in (1, 7, 32, 55):
        shifted = base + np.uint8(offset)
        expected = 10.0 * math.log10(255.0 ** 2 / offset ** 2)
        assert psnr(base, shifted) == pytest.approx(expected, abs=1e-3)


def test_psnr_black_vs_white_is_zero():
    black = np.zeros((16, 16, 3), dtype=np.uint8)
    white = np.full((16, 16, 3), 255, dtype=np.uint8)
    assert psnr(black, white) == pytest.approx(0.0, abs=1e-12)


def test_psnr_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((8, 8, 3), dtype=np.uint8),
             np.zeros((8, 9, 3), dtype=np.uint8))


def test_ssim_identical_is_exactly_one(natural_image):
    img = to_uint8(natural_image)
    assert ssim(img, img) == 1.0


def test_ssim_symmetry(natural_image):
    a = to_uint8(natural_image)
    b = to_uint8(make_natural_image(seed=9))
    assert ssim(a, b) == ssim(b, a)


def test_ssim_bounded(natural_image):
    a = to_uint8(natural_image)
    inverted = 255 - a
    value = ssim(a, inverted)
    assert -1.0 <= value <= 1.0
    assert value < 1.0


def test_ssim_one_only_for_identical(natural_image):
    a = to_uint8(natural_image)
    b = a.copy()
    b[10, 10, 0] += 30
    assert ssim(a, b) < 1.0 - 1e-9


def test_ssim_monotone_under_noise(natural_image):
    base = to_uint8(natural_image)
    rng = np.random.default_rng(5)
    values = []
    for sigma in (5.0, 15.0, 30.0):
        noisy = np.clip(
            base.astype(np.float64) + rng.normal(0.0, sigma, base.shape),
            0, 255,
        ).astype(np.uint8)
        values.append(ssim(base, noisy))
    assert values[0] > values[1] > values[2]


def test_ssim_rejects_tiny_images():
    small = np.zeros((8, 8, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        ssim(small, small)


def test_ssim_float_representation_uses_unit_range(natural_image):
    a = natural_image
    b = np.clip(natural_image + 0.02, 0.0, 1.0)
    eight_bit = ssim(to_uint8(a), to_uint8(b))
    normalized = ssim(a, b)
    assert normalized == pytest.approx(eight_bit, abs=5e-3)


def _write_pair_fixture(tmp_path, offsets):
    """Pairs whose generated image differs by a uniform offset; the per-pair
    PSNR is then analytic and the report mean has a hand-computable value."""
    truth_dir = tmp_path / "truth"
    gen_dir = tmp_path / "generated"
    truth_dir.mkdir()
    gen_dir.mkdir()
    entries = []
    for idx, offset in enumerate(offsets):
        sid = f"s{idx}"
        base = np.full((32, 32, 3), 90, dtype=np.uint8)
        save_image(truth_dir / f"{sid}.png", base)
        save_image(gen_dir / f"{sid}.png", base + np.uint8(offset))
        entries.append(ManifestEntry(
            id=sid, pano_path="unused.png",
            sat_path=str(truth_dir / f"{sid}.png"), split="test",
        ))
    return entries, gen_dir


def test_evaluate_pairs_mean_matches_hand_computation(tmp_path):
    offsets = [4, 8, 16]
    entries, gen_dir = _write_pair_fixture(tmp_path, offsets)
    report = evaluate_pairs(entries, gen_dir)
    assert [p["id"] for p in report.pairs] == ["s0", "s1", "s2"]
    expected_psnrs = [10.0 * math.log10(255.0 ** 2 / o ** 2) for o in offsets]
    for pair, want in zip(report.pairs, expected_psnrs):
        assert pair["psnr"] == pytest.approx(want, abs=1e-3)
    assert report.mean_psnr == pytest.approx(
        sum(expected_psnrs) / 3.0, abs=1e-3
    )
    assert report.mean_mse == pytest.approx(
        np.mean([o ** 2 for o in offsets]), abs=1e-9
    )
    assert not report.skipped


def test_evaluate_identical_pairs(tmp_path):
    entries, gen_dir = _write_pair_fixture(tmp_path, [0, 0])
    report = evaluate_pairs(entries, gen_dir)
    assert report.mean_ssim == 1.0
    assert report.mean_psnr == math.inf
    data = json.loads(report.to_json())
    assert data["mean_psnr"] == "inf"
    assert data["fid"] is None and data["lpips"] is None


def test_evaluate_empty_manifest_is_error(tmp_path):
    with pytest.raises(ValueError):
        evaluate_pairs([], tmp_path)


def test_evaluate_missing_generated_is_skipped(tmp_path):
    entries, gen_dir = _write_pair_fixture(tmp_path, [4, 8])
    (gen_dir / "s1.png").unlink()
    report = evaluate_pairs(entries, gen_dir)
    assert report.skipped == ["s1"]
    assert [p["id"] for p in report.pairs] == ["s0"]


def test_metric_order_independence(tmp_path):
    entries, gen_dir = _write_pair_fixture(tmp_path, [4, 8, 16])
    fwd = evaluate_pairs(entries, gen_dir)
    rev = evaluate_pairs(list(reversed(entries)), gen_dir)
    assert fwd.mean_psnr == pytest.approx(rev.mean_psnr, abs=1e-12)
    assert fwd.mean_ssim == pytest.approx(rev.mean_ssim, abs=1e-12)
