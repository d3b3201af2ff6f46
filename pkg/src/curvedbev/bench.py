"""Throughput benchmark for the remap hot path.

Measures single-core remaps/second for the standard 512x1024 panorama to
512x512 canvas case with a precomputed table.  The reported figure is a
regression alarm: sustained drops below ~100/s on ordinary hardware mean
the hot path lost its precomputed-gather structure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .geometry import BevConfig, apply_remap, build_remap_table


@dataclass
class BenchResult:
    remaps_per_second: float
    ms_per_remap: float
    iterations: int
    grid_size: int
    pano_width: int
    pano_height: int

    def summary(self) -> str:
        return (
            f"{self.pano_width}x{self.pano_height} -> "
            f"{self.grid_size}x{self.grid_size} bilinear: "
            f"{self.ms_per_remap:.2f} ms/remap, "
            f"{self.remaps_per_second:.0f} remaps/s "
            f"({self.iterations} iterations)"
        )


def run_benchmark(cfg: BevConfig | None = None, iterations: int = 50,
                  repeats: int = 3, seed: int = 0) -> BenchResult:
    """Time repeated remaps of one synthetic panorama; best batch wins.

    Taking the best of a few batches filters out scheduler noise without
    hiding real regressions.
    """
    if cfg is None:
        cfg = BevConfig()
    rng = np.random.default_rng(seed)
    pano = rng.integers(
        0, 256, size=(cfg.pano_height, cfg.pano_width, 3), dtype=np.uint8
    )
    table = build_remap_table(cfg)
    apply_remap(pano, table)  # warm the sampling cache

    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(iterations):
            apply_remap(pano, table)
        best = min(best, (time.perf_counter() - t0) / iterations)
    return BenchResult(
        remaps_per_second=1.0 / best,
        ms_per_remap=best * 1000.0,
        iterations=iterations * repeats,
        grid_size=cfg.grid_size,
        pano_width=cfg.pano_width,
        pano_height=cfg.pano_height,
    )
