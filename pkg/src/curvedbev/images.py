"""Image loading, saving, and pixel-representation helpers.

Images are plain numpy arrays of shape (height, width, 3).  Two
representations are used throughout the package, distinguished by dtype:

  - uint8:   8-bit values in [0, 255] (file I/O, stitching, metrics)
  - float64: normalized values in [0, 1] (color mapping, fitting)

PNG and JPEG are supported through Pillow; PNG writes are deterministic
for identical pixel data.
"""

from __future__ import annotations

import numpy as np
from PIL import Image as PILImage


def load_image(path) -> np.ndarray:
    """Load an image file as an (H, W, 3) uint8 RGB array."""
    with PILImage.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_image(path, img: np.ndarray) -> None:
    """Write an (H, W, 3) array as PNG/JPEG (by extension). Floats are
    treated as normalized [0, 1] and converted to 8-bit."""
    arr = ensure_uint8(img)
    PILImage.fromarray(arr, mode="RGB").save(path)


def load_mask(path) -> np.ndarray:
    """Load a single-channel mask PNG as a boolean keep-grid.

    Pixel values >= 128 mean keep, lower values mean discard.
    """
    with PILImage.open(path) as im:
        gray = np.asarray(im.convert("L"), dtype=np.uint8)
    return gray >= 128


def save_mask(path, mask: np.ndarray) -> None:
    """Write a boolean keep-grid as a single-channel PNG (255=keep, 0=discard)."""
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    PILImage.fromarray(arr, mode="L").save(path)


def check_rgb(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate the (H, W, 3) shape contract and return the array."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {img.shape}")
    if img.shape[0] <= 0 or img.shape[1] <= 0:
        raise ValueError(f"{name} has non-positive dimensions {img.shape}")
    return img


def to_float(img: np.ndarray) -> np.ndarray:
    """Convert to the normalized float64 representation in [0, 1]."""
    img = check_rgb(img)
    if img.dtype == np.uint8:
        return img.astype(np.float64) / 255.0
    return np.clip(img.astype(np.float64), 0.0, 1.0)


def ensure_uint8(img: np.ndarray) -> np.ndarray:
    """Convert to the 8-bit representation, rounding normalized floats."""
    img = check_rgb(img)
    if img.dtype == np.uint8:
        return img
    return np.rint(np.clip(img.astype(np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def bilinear_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                    wrap_x: bool = False) -> np.ndarray:
    """Bilinearly sample img (H, W, C) at real-valued (xs, ys) positions.

    Horizontal handling is circular when wrap_x is set, clamped otherwise;
    vertical handling always clamps.  Returns float64 values with shape
    xs.shape + (C,).
    """
    h, w = img.shape[:2]
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)

    if wrap_x:
        x0 = np.floor(xs)
        fx = xs - x0
        ix0 = x0.astype(np.int64) % w
        ix1 = (ix0 + 1) % w
    else:
        xc = np.clip(xs, 0.0, w - 1.0)
        x0 = np.floor(xc)
        fx = xc - x0
        ix0 = x0.astype(np.int64)
        ix1 = np.minimum(ix0 + 1, w - 1)

    yc = np.clip(ys, 0.0, h - 1.0)
    y0 = np.floor(yc)
    fy = yc - y0
    iy0 = y0.astype(np.int64)
    iy1 = np.minimum(iy0 + 1, h - 1)

    fx = fx[..., None]
    fy = fy[..., None]
    p = img.astype(np.float64)
    top = p[iy0, ix0] * (1.0 - fx) + p[iy0, ix1] * fx
    bot = p[iy1, ix0] * (1.0 - fx) + p[iy1, ix1] * fx
    return top * (1.0 - fy) + bot * fy
