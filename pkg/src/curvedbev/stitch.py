"""Compositing several per-camera BEV images onto one satellite-aligned canvas.

Each output pixel is sourced from the camera whose capture point is
nearest (Voronoi assignment over camera positions), looked up in that
camera's BEV at the pixel position minus the camera's offset from the
satellite center.  Pixels the nearest camera cannot supply (source out of
bounds, or discarded by its occlusion mask) fall back to the next-nearest
camera; pixels no camera can supply take the fill color and are reported
uncovered.  Selection only, no blending.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import BevConfig, RemapTable, elevation_from_v
from .images import bilinear_sample, check_rgb


@dataclass(frozen=True)
class CameraPlacement:
    """Offset of one panorama's capture point from the satellite center.

    dx is along columns (rightward), dy along rows (downward), both in
    satellite pixels.
    """

    index: int
    dx: float
    dy: float

    def position(self, sat_size: int) -> tuple[float, float]:
        return (sat_size / 2.0 + self.dx, sat_size / 2.0 + self.dy)


@dataclass
class StitchScene:
    """A satellite canvas plus its contributing cameras.

    fill_color is expressed in the BEV images' own representation
    (0..255 for uint8 inputs, 0..1 for normalized floats).
    """

    sat_size: int
    cameras: list  # [(CameraPlacement, bev image, keep mask)]
    fill_color: tuple = (128, 128, 128)

    def __post_init__(self):
        if self.sat_size <= 0:
            raise ValueError(f"sat_size must be positive, got {self.sat_size}")
        if not self.cameras:
            raise ValueError("a stitch scene needs at least one camera")
        sizes = set()
        dtypes = set()
        for placement, bev, mask in self.cameras:
            bev = check_rgb(bev, f"camera {placement.index} BEV")
            dtypes.add(bev.dtype)
            if bev.shape[0] != bev.shape[1]:
                raise ValueError(
                    f"camera {placement.index} BEV is not square: {bev.shape}"
                )
            if mask.shape != bev.shape[:2]:
                raise ValueError(
                    f"camera {placement.index} mask {mask.shape} does not match "
                    f"its BEV {bev.shape[:2]}"
                )
            sizes.add(bev.shape[0])
            xc, yc = placement.position(self.sat_size)
            if not (0 <= xc < self.sat_size and 0 <= yc < self.sat_size):
                warnings.warn(
                    f"camera {placement.index} capture point ({xc:.1f}, {yc:.1f}) "
                    f"lies outside the satellite canvas",
                    stacklevel=2,
                )
        if len(sizes) != 1:
            raise ValueError(f"camera BEV sizes differ: {sorted(sizes)}")
        if len(dtypes) != 1:
            raise ValueError(
                f"camera BEV dtypes differ: {sorted(map(str, dtypes))}"
            )


def assign_nearest_camera(x: float, y: float, placements, sat_size: int) -> int:
    """Camera id nearest to satellite-pixel (x, y); ties go to the lowest id.

    Distances are compared squared, so exact ties resolve exactly.
    """
    if not placements:
        raise ValueError("placements must be non-empty")
    best_id = None
    best_d2 = None
    for placement in sorted(placements, key=lambda p: p.index):
        xc, yc = placement.position(sat_size)
        d2 = (x - xc) ** 2 + (y - yc) ** 2
        if best_d2 is None or d2 < best_d2:
            best_d2 = d2
            best_id = placement.index
    return best_id


def stitch_multi_to_one(scene: StitchScene):
    """Composite a scene onto the satellite canvas.

    Returns (canvas, coverage): an sat_size x sat_size image plus a boolean
    grid that is true exactly where some camera supplied the pixel.
    """
    s = scene.sat_size
    cams = sorted(scene.cameras, key=lambda c: c[0].index)
    n = len(cams)
    dtype = cams[0][1].dtype

    ys, xs = np.mgrid[0:s, 0:s].astype(np.float64)
    d2 = np.empty((n, s, s), dtype=np.float64)
    for ci, (placement, _, _) in enumerate(cams):
        xc, yc = placement.position(s)
        d2[ci] = (xs - xc) ** 2 + (ys - yc) ** 2
    # stable sort keeps the lower camera id first on exact ties
    order = np.argsort(d2, axis=0, kind="stable")

    out = np.empty((s, s, 3), dtype=np.float64)
    out[:] = np.asarray(scene.fill_color, dtype=np.float64)
    covered = np.zeros((s, s), dtype=bool)

    for rank in range(n):
        pending = ~covered
        if not pending.any():
            break
        choice = order[rank]
        for ci, (placement, bev, mask) in enumerate(cams):
            sel = pending & (choice == ci)
            if not sel.any():
                continue
            l = bev.shape[0]
            sx = xs[sel] - placement.dx
            sy = ys[sel] - placement.dy
            ok = (sx >= 0.0) & (sx <= l - 1.0) & (sy >= 0.0) & (sy <= l - 1.0)
            if not ok.any():
                continue
            sxo = sx[ok]
            syo = sy[ok]
            kept = mask[
                np.rint(syo).astype(np.int64), np.rint(sxo).astype(np.int64)
            ]
            if not kept.any():
                continue
            rows, cols = np.nonzero(sel)
            rows = rows[ok][kept]
            cols = cols[ok][kept]
            out[rows, cols] = bilinear_sample(bev, sxo[kept], syo[kept])
            covered[rows, cols] = True

    if dtype == np.uint8:
        canvas = np.rint(np.clip(out, 0.0, 255.0)).astype(np.uint8)
    else:
        canvas = out.astype(dtype)
    return canvas, covered


def heuristic_occlusion_mask(cfg: BevConfig, table: RemapTable,
                             elevation_margin: float = 0.05) -> np.ndarray:
    """Keep-grid discarding BEV pixels sourced at or above the horizon band.

    A table entry whose source elevation exceeds -elevation_margin samples
    content at or above camera height (facades, sky); those regions carry
    severe projection distortion and are dropped.  Stand-in for mask files
    when none are supplied.
    """
    if table.config != cfg:
        raise ValueError("remap table was not built from this config")
    phi = elevation_from_v(table.v, cfg)
    return phi <= -float(elevation_margin)
