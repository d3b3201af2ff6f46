"""Curved bird's-eye-view projection from equirectangular street panoramas.

The BEV canvas is an l x l grid aligned with a satellite image.  Each
canvas index (i, j) is lifted to a camera-centered 3D point on a curved
ground surface whose height grows with the fourth power of the normalized
radial distance:

    x = j - l/2,  y = l/2 - i,  z = (sqrt(x^2 + y^2) / norm_radius)^4 * curvature

The point is then expressed in spherical direction angles relative to a
camera at height ``camera_height`` on the z-axis and mapped to panorama
pixel coordinates through the equirectangular projection:

    theta = arctan2(y, x)                   azimuth, north-aligned columns
    phi   = arctan2(z - camera_height, r)   elevation from the horizon
    u     = (theta + pi) * w / (2*pi)       wraps modulo w
    v_raw = (pi/2 + phi) * h / pi           0 at nadir as the formula reads

Real panoramas store the sky at row 0, so ``v_flip`` (on by default)
converts v_raw to v = h - v_raw.  The full per-pixel mapping depends only
on the configuration, so it is precomputed once into a RemapTable and
reused for every panorama.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .images import check_rgb

TABLE_MAGIC = b"CBEV1"
_HEADER = struct.Struct("<5sIIIdddB")


@dataclass(frozen=True)
class BevConfig:
    """Projection constants for one dataset profile.

    norm_radius defaults to the center-to-corner distance (l/2)*sqrt(2),
    so the normalized radial distance spans exactly [0, 1] on the canvas
    and the surface height at the corners equals ``curvature``.
    """

    grid_size: int = 512
    curvature: float = 3.0
    camera_height: float = 1.5
    pano_width: int = 1024
    pano_height: int = 512
    norm_radius: float = 0.0  # 0 means "use the default"
    v_flip: bool = True

    def __post_init__(self):
        if self.grid_size <= 0:
            raise ValueError(f"grid_size must be positive, got {self.grid_size}")
        if self.pano_width <= 0 or self.pano_height <= 0:
            raise ValueError(
                f"panorama dimensions must be positive, got "
                f"{self.pano_width}x{self.pano_height}"
            )
        if self.curvature < 0:
            raise ValueError(f"curvature must be >= 0, got {self.curvature}")
        if self.camera_height <= 0:
            raise ValueError(f"camera_height must be > 0, got {self.camera_height}")
        if self.pano_width != 2 * self.pano_height:
            warnings.warn(
                f"panorama {self.pano_width}x{self.pano_height} is not 2:1; "
                "standard equirectangular input expected",
                stacklevel=2,
            )
        if self.norm_radius == 0.0:
            object.__setattr__(
                self, "norm_radius", (self.grid_size / 2.0) * math.sqrt(2.0)
            )
        if self.norm_radius <= 0:
            raise ValueError(f"norm_radius must be > 0, got {self.norm_radius}")


class BevIndex(NamedTuple):
    i: int  # row
    j: int  # column


class WorldPoint(NamedTuple):
    x: float
    y: float
    z: float


class SphericalDir(NamedTuple):
    theta: float  # azimuth in [-pi, pi]
    phi: float    # elevation, negative below the camera
    degenerate: bool = False


class PanoCoord(NamedTuple):
    u: float  # column, in [0, w), wraps circularly
    v: float  # row, in [0, h], clamps at the poles


def bev_index_to_world(idx: BevIndex, cfg: BevConfig) -> WorldPoint:
    """Lift a BEV canvas index onto the curved ground surface."""
    i, j = idx
    if not (0 <= i < cfg.grid_size and 0 <= j < cfg.grid_size):
        raise ValueError(
            f"index ({i}, {j}) out of bounds for grid size {cfg.grid_size}"
        )
    half = cfg.grid_size / 2.0
    x = j - half
    y = half - i
    r = math.hypot(x, y)
    z = (r / cfg.norm_radius) ** 4 * cfg.curvature
    return WorldPoint(x, y, z)


def world_to_spherical(p: WorldPoint, cfg: BevConfig) -> SphericalDir:
    """Direction angles of a world point as seen from the camera.

    The point on the camera axis (x=y=0) has no defined azimuth; by
    convention it maps straight down (theta=0, phi=-pi/2) and is flagged.
    """
    x, y, z = p
    if x == 0.0 and y == 0.0:
        return SphericalDir(0.0, -math.pi / 2.0, degenerate=True)
    r = math.hypot(x, y)
    return SphericalDir(math.atan2(y, x), math.atan2(z - cfg.camera_height, r))


def world_to_pano(p: WorldPoint, cfg: BevConfig) -> PanoCoord:
    """Map a world point to panorama pixel coordinates (equirectangular)."""
    s = world_to_spherical(p, cfg)
    u = (s.theta + math.pi) * cfg.pano_width / (2.0 * math.pi)
    u = u % cfg.pano_width
    v = (math.pi / 2.0 + s.phi) * cfg.pano_height / math.pi
    if cfg.v_flip:
        v = cfg.pano_height - v
    v = min(max(v, 0.0), float(cfg.pano_height))
    return PanoCoord(u, v)


def elevation_from_v(v, cfg: BevConfig):
    """Invert the row mapping of world_to_pano back to the elevation angle."""
    v_raw = cfg.pano_height - np.asarray(v, dtype=np.float64) if cfg.v_flip \
        else np.asarray(v, dtype=np.float64)
    return v_raw * math.pi / cfg.pano_height - math.pi / 2.0


@dataclass(eq=False)
class RemapTable:
    """Precomputed panorama source coordinates for every BEV canvas pixel.

    u, v are (l, l) float64 arrays; in_range marks entries whose raw row
    coordinate needed no clamping (all true for this projection family).
    A deterministic function of its BevConfig: the same config always
    produces a bit-identical table.
    """

    config: BevConfig
    u: np.ndarray
    v: np.ndarray
    in_range: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def entry(self, i: int, j: int) -> PanoCoord:
        return PanoCoord(float(self.u[i, j]), float(self.v[i, j]))

    def save(self, path) -> None:
        """Write the little-endian binary table format.

        Header: magic "CBEV1", u32 grid size, u32 pano width, u32 pano
        height, f64 curvature, f64 camera height, f64 norm radius,
        u8 v_flip; then l*l (u, v) float32 pairs in row-major order.
        """
        cfg = self.config
        uv = np.empty((cfg.grid_size, cfg.grid_size, 2), dtype="<f4")
        uv[..., 0] = self.u
        uv[..., 1] = self.v
        # float32 rounding can push u up to exactly w (the seam); wrap it back
        seam = uv[..., 0] >= cfg.pano_width
        uv[..., 0][seam] = 0.0
        np.minimum(uv[..., 1], np.float32(cfg.pano_height), out=uv[..., 1])
        header = _HEADER.pack(
            TABLE_MAGIC, cfg.grid_size, cfg.pano_width, cfg.pano_height,
            cfg.curvature, cfg.camera_height, cfg.norm_radius, int(cfg.v_flip),
        )
        with open(path, "wb") as f:
            f.write(header)
            f.write(uv.tobytes())

    @classmethod
    def load(cls, path) -> "RemapTable":
        with open(path, "rb") as f:
            raw = f.read()
        if len(raw) < _HEADER.size:
            raise ValueError(f"{path}: truncated remap table")
        magic, l, w, h, curv, cam_h, norm_r, flip = _HEADER.unpack_from(raw)
        if magic != TABLE_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        body = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
        if body.size != l * l * 2:
            raise ValueError(
                f"{path}: expected {l * l * 2} coordinates, found {body.size}"
            )
        uv = body.reshape(l, l, 2).astype(np.float64)
        cfg = BevConfig(
            grid_size=l, curvature=curv, camera_height=cam_h,
            pano_width=w, pano_height=h, norm_radius=norm_r, v_flip=bool(flip),
        )
        u = uv[..., 0]
        v = uv[..., 1]
        in_range = np.isfinite(u) & np.isfinite(v) & (v >= 0.0) & (v <= h)
        return cls(config=cfg, u=u, v=v, in_range=in_range)

    def _sampling_indices(self):
        """Flat gather indices and corner weights for the bilinear hot path."""
        cached = self._cache.get("bilinear")
        if cached is not None:
            return cached
        w = self.config.pano_width
        h = self.config.pano_height
        u0 = np.floor(self.u)
        fu = (self.u - u0).astype(np.float32).ravel()
        iu0 = u0.astype(np.int64) % w
        iu1 = (iu0 + 1) % w
        vc = np.clip(self.v, 0.0, h - 1.0)
        v0 = np.floor(vc)
        fv = (vc - v0).astype(np.float32).ravel()
        iv0 = v0.astype(np.int64)
        iv1 = np.minimum(iv0 + 1, h - 1)
        flat = (
            (iv0 * w + iu0).ravel(), (iv0 * w + iu1).ravel(),
            (iv1 * w + iu0).ravel(), (iv1 * w + iu1).ravel(),
        )
        weights = (
            (1.0 - fu) * (1.0 - fv), fu * (1.0 - fv),
            (1.0 - fu) * fv, fu * fv,
        )
        cached = (flat, weights)
        self._cache["bilinear"] = cached
        return cached

    def _nearest_indices(self):
        cached = self._cache.get("nearest")
        if cached is not None:
            return cached
        w = self.config.pano_width
        h = self.config.pano_height
        iu = np.floor(self.u + 0.5).astype(np.int64) % w
        iv = np.clip(np.floor(self.v + 0.5), 0, h - 1).astype(np.int64)
        cached = (iv * w + iu).ravel()
        self._cache["nearest"] = cached
        return cached


def build_remap_table(cfg: BevConfig) -> RemapTable:
    """Evaluate the full index -> panorama mapping over the canvas."""
    l = cfg.grid_size
    half = l / 2.0
    jj = np.arange(l, dtype=np.float64)[None, :]
    ii = np.arange(l, dtype=np.float64)[:, None]
    x = jj - half
    y = half - ii
    r = np.hypot(x, y)
    z = (r / cfg.norm_radius) ** 4 * cfg.curvature
    theta = np.arctan2(y, x)
    # arctan2(z - H, 0) = -pi/2 at the center since H > 0, matching the
    # straight-down convention of world_to_spherical
    phi = np.arctan2(z - cfg.camera_height, r)
    u = ((theta + math.pi) * cfg.pano_width / (2.0 * math.pi)) % cfg.pano_width
    v_raw = (math.pi / 2.0 + phi) * cfg.pano_height / math.pi
    in_range = (v_raw >= 0.0) & (v_raw <= cfg.pano_height) & np.isfinite(v_raw)
    v = cfg.pano_height - v_raw if cfg.v_flip else v_raw
    v = np.clip(v, 0.0, float(cfg.pano_height))
    return RemapTable(config=cfg, u=u, v=v, in_range=in_range)


def sample_bilinear(pano: np.ndarray, coord: PanoCoord) -> tuple[float, float, float]:
    """Interpolate one panorama sample; columns wrap, rows clamp."""
    pano = check_rgb(pano, "panorama")
    h, w = pano.shape[:2]
    u, v = coord
    u0 = math.floor(u)
    fu = u - u0
    iu0 = int(u0) % w
    iu1 = (iu0 + 1) % w
    vc = min(max(v, 0.0), h - 1.0)
    v0 = math.floor(vc)
    fv = vc - v0
    iv0 = int(v0)
    iv1 = min(iv0 + 1, h - 1)
    p = pano.astype(np.float64)
    top = p[iv0, iu0] * (1.0 - fu) + p[iv0, iu1] * fu
    bot = p[iv1, iu0] * (1.0 - fu) + p[iv1, iu1] * fu
    out = top * (1.0 - fv) + bot * fv
    return (float(out[0]), float(out[1]), float(out[2]))


def apply_remap(pano: np.ndarray, table: RemapTable,
                method: str = "bilinear") -> np.ndarray:
    """Project a panorama onto the BEV canvas through a remap table.

    Pure function of its inputs: identical panorama and table give a
    bit-identical result.  Output matches the input dtype (uint8 results
    are rounded to nearest).
    """
    pano = check_rgb(pano, "panorama")
    cfg = table.config
    if pano.shape[0] != cfg.pano_height or pano.shape[1] != cfg.pano_width:
        raise ValueError(
            f"panorama is {pano.shape[1]}x{pano.shape[0]} but the table "
            f"expects {cfg.pano_width}x{cfg.pano_height}"
        )
    l = cfg.grid_size
    if method == "nearest":
        out = pano.reshape(-1, 3)[table._nearest_indices()]
        return out.reshape(l, l, 3).copy()
    if method != "bilinear":
        raise ValueError(f"unknown resampling method {method!r}")
    if pano.dtype != np.uint8:
        # non-hot path for normalized images: full float64 precision
        from .images import bilinear_sample
        out = bilinear_sample(pano, table.u, table.v, wrap_x=True)
        return out.astype(pano.dtype)
    # hot path: planar per-channel gathers with precomputed indices/weights
    idx, wts = table._sampling_indices()
    out = np.empty((l * l, 3), dtype=np.float32)
    for c in range(3):
        src = np.ascontiguousarray(pano[..., c]).reshape(-1)
        acc = src.take(idx[0]).astype(np.float32)
        acc *= wts[0]
        acc += src.take(idx[1]) * wts[1]
        acc += src.take(idx[2]) * wts[2]
        acc += src.take(idx[3]) * wts[3]
        out[:, c] = acc
    return np.rint(out, out=out).astype(np.uint8).reshape(l, l, 3)
