"""Geometric and photometric toolkit for street-to-satellite synthesis:
curved BEV projection of equirectangular panoramas, satellite-aligned
stitching, deterministic color relighting, content metrics, and
conditioning-dataset export."""

from .geometry import (
    BevConfig,
    BevIndex,
    PanoCoord,
    RemapTable,
    SphericalDir,
    WorldPoint,
    apply_remap,
    bev_index_to_world,
    build_remap_table,
    sample_bilinear,
    world_to_pano,
    world_to_spherical,
)
from .stitch import (
    CameraPlacement,
    StitchScene,
    assign_nearest_camera,
    heuristic_occlusion_mask,
    stitch_multi_to_one,
)
from .relight import (
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
from .metrics import EvalReport, evaluate_pairs, mse, psnr, ssim
from .dataset import (
    ManifestEntry,
    SceneDescriptor,
    export_conditioning_set,
    group_by_satellite,
    load_manifest,
    profile_config,
)

__version__ = "0.1.0"

__all__ = [
    "BevConfig", "BevIndex", "PanoCoord", "RemapTable", "SphericalDir",
    "WorldPoint", "apply_remap", "bev_index_to_world", "build_remap_table",
    "sample_bilinear", "world_to_pano", "world_to_spherical",
    "CameraPlacement", "StitchScene", "assign_nearest_camera",
    "heuristic_occlusion_mask", "stitch_multi_to_one",
    "ColorStats", "ColorTransform", "DncmParams", "apply_dncm",
    "compute_color_stats", "default_identity_params", "fit_style_transform",
    "identity_transform", "normalize_content", "relight",
    "EvalReport", "evaluate_pairs", "mse", "psnr", "ssim",
    "ManifestEntry", "SceneDescriptor", "export_conditioning_set",
    "group_by_satellite", "load_manifest", "profile_config",
]
