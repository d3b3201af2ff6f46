"""Content-consistency metrics (MSE, PSNR, SSIM) and paired evaluation.

SSIM is the standard single-scale formulation: 11x11 Gaussian window with
sigma 1.5, stability constants K1=0.01 and K2=0.03, valid-mode filtering,
and the per-channel results averaged for RGB.  The dynamic range follows
the pixel representation (255 for uint8, 1.0 for normalized floats).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .images import check_rgb, load_image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(a: np.ndarray, b: np.ndarray):
    a = check_rgb(a, "first image")
    b = check_rgb(b, "second image")
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    return a, b


def _peak_for(img: np.ndarray) -> float:
    return 255.0 if img.dtype == np.uint8 else 1.0


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _check_pair(a, b)
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(a: np.ndarray, b: np.ndarray, peak: float | None = None,
         cap: float | None = None) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give +inf.

    peak defaults from the representation; pass cap (e.g. 99.0) to bound
    the identical-image case for downstream arithmetic.
    """
    a, b = _check_pair(a, b)
    if peak is None:
        peak = _peak_for(a)
    err = mse(a, b)
    if err == 0.0:
        return float(cap) if cap is not None else math.inf
    value = 10.0 * math.log10(peak * peak / err)
    if cap is not None:
        value = min(value, float(cap))
    return value


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a symmetric 1-D window."""
    t = sliding_window_view(x, g.size, axis=0) @ g
    return sliding_window_view(t, g.size, axis=1) @ g


def _ssim_channel(x: np.ndarray, y: np.ndarray, peak: float) -> float:
    g = _gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mu_x = _filter_valid(x, g)
    mu_y = _filter_valid(y, g)
    sigma_x = _filter_valid(x * x, g) - mu_x * mu_x
    sigma_y = _filter_valid(y * y, g) - mu_y * mu_y
    sigma_xy = _filter_valid(x * y, g) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sigma_xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x + sigma_y + c2)
    return float(np.mean(num / den))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity over RGB channels; 1.0 iff identical."""
    a, b = _check_pair(a, b)
    if min(a.shape[0], a.shape[1]) < SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM, "
            f"got {a.shape[1]}x{a.shape[0]}"
        )
    peak = _peak_for(a)
    xf = a.astype(np.float64)
    yf = b.astype(np.float64)
    channels = [_ssim_channel(xf[..., c], yf[..., c], peak) for c in range(3)]
    return float(np.mean(channels))


@dataclass
class EvalReport:
    """Per-pair and aggregate metrics over a manifest evaluation."""

    pairs: list = field(default_factory=list)  # [{id, ssim, psnr, mse}]
    skipped: list = field(default_factory=list)
    mean_ssim: float = 0.0
    mean_psnr: float = 0.0
    mean_mse: float = 0.0

    def to_json(self) -> str:
        def enc(x):
            if isinstance(x, float) and math.isinf(x):
                return "inf"
            return x

        obj = {
            "pairs": [
                {k: enc(v) for k, v in pair.items()} for pair in self.pairs
            ],
            "mean_ssim": enc(self.mean_ssim),
            "mean_psnr": enc(self.mean_psnr),
            "mean_mse": enc(self.mean_mse),
            "skipped": list(self.skipped),
            # reserved for neural metrics filled in by external tooling
            "fid": None,
            "lpips": None,
        }
        return json.dumps(obj, indent=2)


def evaluate_pairs(entries, generated_dir, cap: float | None = None) -> EvalReport:
    """Compare each manifest entry's satellite image against generated_dir/<id>.png.

    Unreadable or missing pairs are skipped and listed in the report; an
    empty manifest is an error.
    """
    from pathlib import Path

    entries = list(entries)
    if not entries:
        raise ValueError("manifest is empty; nothing to evaluate")
    generated_dir = Path(generated_dir)
    report = EvalReport()
    ssim_vals, psnr_vals, mse_vals = [], [], []
    for entry in entries:
        gen_path = generated_dir / f"{entry.id}.png"
        try:
            truth = load_image(entry.sat_path)
            gen = load_image(gen_path)
            pair = {
                "id": entry.id,
                "ssim": ssim(truth, gen),
                "psnr": psnr(truth, gen, cap=cap),
                "mse": mse(truth, gen),
            }
        except (OSError, ValueError):
            report.skipped.append(entry.id)
            continue
        report.pairs.append(pair)
        ssim_vals.append(pair["ssim"])
        psnr_vals.append(pair["psnr"])
        mse_vals.append(pair["mse"])
    if ssim_vals:
        report.mean_ssim = float(np.mean(ssim_vals))
        report.mean_psnr = sum(psnr_vals) / len(psnr_vals)
        report.mean_mse = float(np.mean(mse_vals))
    return report
