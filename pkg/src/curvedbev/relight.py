"""Deterministic per-pixel color mapping and a two-stage relighting pipeline.

Every pixel p (a row 3-vector in [0, 1]) is transformed through a fixed
linear chain

    p' = clamp((p . P) . T . Q, 0, 1)

where P (3 x k) embeds color into a k-dimensional space, Q (k x 3)
recovers color, and T (k x k) carries the per-image transform.  P and Q
default to a block-identity construction (identity in the top 3 x 3,
zeros elsewhere) and can be loaded from JSON to accept externally trained
matrices.

Transforms are fitted in closed form: target pixels are produced by
moment matching (an affine map aligning channel means and covariances
between two images), then a ridge least-squares solve finds the embedded-
space map realizing that target.  Relighting composes two such fits:
normalize the input toward canonical statistics, then stylize toward a
reference image.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .images import check_rgb

DEFAULT_EMBED_DIM = 32
DEFAULT_RIDGE = 1e-3
DEFAULT_THUMB = 64
_COV_EPS = 1e-8


@dataclass(frozen=True)
class DncmParams:
    """Color embedding matrix P (3 x k) and recovery matrix Q (k x 3)."""

    k: int
    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        if self.k < 3:
            raise ValueError(f"embedding dimension must be >= 3, got {self.k}")
        P = np.asarray(self.P, dtype=np.float64)
        Q = np.asarray(self.Q, dtype=np.float64)
        if P.shape != (3, self.k):
            raise ValueError(f"P must be 3x{self.k}, got {P.shape}")
        if Q.shape != (self.k, 3):
            raise ValueError(f"Q must be {self.k}x3, got {Q.shape}")
        if not (np.isfinite(P).all() and np.isfinite(Q).all()):
            raise ValueError("P and Q must be finite")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)

    def to_json(self) -> str:
        return json.dumps(
            {"k": self.k, "P": self.P.ravel().tolist(), "Q": self.Q.ravel().tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "DncmParams":
        obj = json.loads(text)
        k = int(obj["k"])
        return cls(
            k=k,
            P=np.asarray(obj["P"], dtype=np.float64).reshape(3, k),
            Q=np.asarray(obj["Q"], dtype=np.float64).reshape(k, 3),
        )


@dataclass(frozen=True)
class ColorTransform:
    """Per-image k x k transform applied in the embedded color space."""

    T: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.T, dtype=np.float64)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError(f"T must be square, got {T.shape}")
        if not np.isfinite(T).all():
            raise ValueError("T must be finite")
        object.__setattr__(self, "T", T)

    @property
    def k(self) -> int:
        return self.T.shape[0]

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "T": self.T.ravel().tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ColorTransform":
        obj = json.loads(text)
        k = int(obj["k"])
        return cls(T=np.asarray(obj["T"], dtype=np.float64).reshape(k, k))


@dataclass(frozen=True)
class ColorStats:
    """Mean and covariance of an image's pixels in the embedded space."""

    mean: np.ndarray   # (k,)
    cov: np.ndarray    # (k, k), symmetric PSD
    thumb: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance {cov.shape} does not match mean {mean.shape}")
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise ValueError("color statistics must be finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


def default_identity_params(k: int = DEFAULT_EMBED_DIM) -> DncmParams:
    """Block-identity P and Q; with T = I_k the whole chain is the identity."""
    P = np.zeros((3, k))
    P[:, :3] = np.eye(3)
    Q = np.zeros((k, 3))
    Q[:3, :] = np.eye(3)
    return DncmParams(k=k, P=P, Q=Q)


def identity_transform(k: int = DEFAULT_EMBED_DIM) -> ColorTransform:
    return ColorTransform(T=np.eye(k))


def _require_normalized(img: np.ndarray, name: str) -> np.ndarray:
    img = check_rgb(img, name)
    if img.dtype == np.uint8:
        raise ValueError(
            f"{name} must be in the normalized float representation; "
            "convert with images.to_float first"
        )
    return np.asarray(img, dtype=np.float64)


def apply_dncm(img: np.ndarray, params: DncmParams, t: ColorTransform) -> np.ndarray:
    """Run the embedded color chain over every pixel; clamps once at the end."""
    img = _require_normalized(img, "image")
    if t.k != params.k:
        raise ValueError(
            f"transform dimension {t.k} does not match params k={params.k}"
        )
    h, w = img.shape[:2]
    pixels = img.reshape(-1, 3)
    out = ((pixels @ params.P) @ t.T) @ params.Q
    return np.clip(out, 0.0, 1.0).reshape(h, w, 3)


def _thumbnail(img: np.ndarray, size: int) -> np.ndarray:
    """Deterministic size x size bilinear thumbnail for statistics/fitting."""
    from .images import bilinear_sample

    h, w = img.shape[:2]
    if h == size and w == size:
        return img
    ys = (np.arange(size, dtype=np.float64) + 0.5) * h / size - 0.5
    xs = (np.arange(size, dtype=np.float64) + 0.5) * w / size - 0.5
    grid_x, grid_y = np.meshgrid(xs, ys)
    return bilinear_sample(img, grid_x, grid_y)


def compute_color_stats(img: np.ndarray, params: DncmParams,
                        thumb: int = DEFAULT_THUMB) -> ColorStats:
    """Embedded-space channel mean and covariance of a thumbnailed image."""
    img = _require_normalized(img, "image")
    small = _thumbnail(img, thumb)
    embedded = small.reshape(-1, 3) @ params.P
    mean = embedded.mean(axis=0)
    centered = embedded - mean
    cov = centered.T @ centered / embedded.shape[0]
    return ColorStats(mean=mean, cov=cov, thumb=thumb)


def _stats_to_rgb(stats: ColorStats, params: DncmParams):
    """Pull embedded statistics back to RGB through the embedding pseudo-inverse."""
    pinv = np.linalg.pinv(params.P)  # (k, 3)
    mean = stats.mean @ pinv
    cov = pinv.T @ stats.cov @ pinv
    return mean, cov


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _moment_match_map(mean_src, cov_src, mean_dst, cov_dst):
    """Affine map A, b with x -> x A + b aligning source moments to target.

    Uses the symmetric (Monge-Kantorovich) solution.  Near-constant source
    images have no usable covariance; those fall back to matching means
    only, with a warning.
    """
    if np.trace(cov_src) < _COV_EPS:
        warnings.warn(
            "content image is nearly constant; matching means only",
            stacklevel=3,
        )
        A = np.zeros((3, 3))
        return A, mean_dst.copy()
    src_half = _sqrtm_psd(cov_src)
    src_half_inv = np.linalg.pinv(src_half)
    inner = _sqrtm_psd(src_half @ cov_dst @ src_half)
    M = src_half_inv @ inner @ src_half_inv  # symmetric, maps row vectors
    return M, mean_dst - mean_src @ M


def _fit_transform_to_targets(content_small: np.ndarray, targets: np.ndarray,
                              params: DncmParams, ridge: float) -> ColorTransform:
    """Ridge least squares in the embedded space, lifted back to a k x k map."""
    X = content_small.reshape(-1, 3) @ params.P          # (N, k)
    Y = targets.reshape(-1, 3)                            # (N, 3)
    k = params.k
    gram = X.T @ X + ridge * np.eye(k)
    M = np.linalg.solve(gram, X.T @ Y)                    # (k, 3)
    return ColorTransform(T=M @ np.linalg.pinv(params.Q))


def fit_style_transform(content: np.ndarray, reference: np.ndarray,
                        params: DncmParams, ridge: float = DEFAULT_RIDGE,
                        thumb: int = DEFAULT_THUMB) -> ColorTransform:
    """Fit T so applying it moves content's color moments onto reference's."""
    if ridge <= 0:
        raise ValueError(f"ridge must be > 0, got {ridge}")
    content = _require_normalized(content, "content")
    reference = _require_normalized(reference, "reference")
    c_small = _thumbnail(content, thumb)
    r_small = _thumbnail(reference, thumb)
    c_pix = c_small.reshape(-1, 3)
    r_pix = r_small.reshape(-1, 3)
    A, b = _moment_match_map(
        c_pix.mean(axis=0), np.cov(c_pix, rowvar=False, bias=True),
        r_pix.mean(axis=0), np.cov(r_pix, rowvar=False, bias=True),
    )
    targets = c_pix @ A + b
    return _fit_transform_to_targets(c_small, targets, params, ridge)


def normalize_content(img: np.ndarray, canonical: ColorStats,
                      params: DncmParams, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    """Map an image's color statistics onto canonical dataset statistics."""
    img = _require_normalized(img, "image")
    small = _thumbnail(img, canonical.thumb)
    pix = small.reshape(-1, 3)
    mean_dst, cov_dst = _stats_to_rgb(canonical, params)
    A, b = _moment_match_map(
        pix.mean(axis=0), np.cov(pix, rowvar=False, bias=True), mean_dst, cov_dst
    )
    targets = pix @ A + b
    t = _fit_transform_to_targets(small, targets, params, ridge)
    return apply_dncm(img, params, t)


def relight(i0: np.ndarray, reference: np.ndarray, canonical: ColorStats,
            params: DncmParams, ridge: float = DEFAULT_RIDGE,
            thumb: int = DEFAULT_THUMB) -> np.ndarray:
    """Normalize toward canonical statistics, then stylize toward a reference.

    Output dimensions always equal the input's; the synthesis pipeline runs
    identically with this stage disabled.
    """
    normalized = normalize_content(i0, canonical, params, ridge=ridge)
    t = fit_style_transform(normalized, reference, params, ridge=ridge, thumb=thumb)
    return apply_dncm(normalized, params, t)
