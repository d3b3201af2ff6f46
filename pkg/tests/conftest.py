"""Shared synthetic-image fixtures.

No dataset imagery ships with the repository, so tests synthesize
deterministic stand-ins: multi-scale smooth random fields for natural
image statistics and street-scene-like panoramas (sky gradient over
ground texture) for projection tests.
"""

import numpy as np
import pytest

from curvedbev.images import bilinear_sample


def make_natural_image(size=256, seed=1, lo=0.05, hi=0.85):
    """Smooth multi-scale random field in [lo, hi], float64 (size, size, 3)."""
    r = np.random.default_rng(seed)
    img = np.zeros((size, size, 3))
    for scale in (4, 8, 16, 32):
        coarse = r.random((scale, scale, 3))
        ys = np.linspace(0, scale - 1, size)
        xs = np.linspace(0, scale - 1, size)
        gx, gy = np.meshgrid(xs, ys)
        img += bilinear_sample(coarse, gx, gy) / scale ** 0.5
    img -= img.min()
    img /= img.max()
    return lo + img * (hi - lo)


def make_pano(seed=0, h=512, w=1024):
    """Street-scene-like uint8 panorama: sky gradient plus smooth texture."""
    r = np.random.default_rng(seed)
    img = np.zeros((h, w, 3))
    rows = np.linspace(0, 1, h)[:, None, None]
    img += (1 - rows) * np.array([0.5, 0.65, 0.9]) + rows * np.array([0.35, 0.3, 0.25])
    for scale in (8, 16, 32, 64):
        coarse = r.random((scale, 2 * scale, 3)) - 0.5
        ys = np.linspace(0, scale - 1, h)
        xs = np.linspace(0, 2 * scale - 1, w)
        gx, gy = np.meshgrid(xs, ys)
        img += bilinear_sample(coarse, gx, gy) * (0.5 / scale ** 0.5)
    return np.rint(np.clip(img, 0, 1) * 255).astype(np.uint8)


def to_uint8(img):
    return np.rint(np.clip(img, 0, 1) * 255).astype(np.uint8)


@pytest.fixture
def natural_image():
    return make_natural_image()


@pytest.fixture
def pano():
    return make_pano()
