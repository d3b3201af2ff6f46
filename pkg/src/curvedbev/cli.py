"""Command-line surface for batch projection, stitching, relighting,
evaluation, and conditioning-set export.

Every command is deterministic: identical inputs produce byte-identical
outputs.  Exit codes: 0 success, 1 runtime/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import dataset as ds
from . import metrics
from .bench import run_benchmark
from .geometry import BevConfig, RemapTable, apply_remap, build_remap_table
from .images import load_image, load_mask, save_image, save_mask, to_float
from .relight import (
    DncmParams, compute_color_stats, default_identity_params, relight,
)
from .stitch import StitchScene, heuristic_occlusion_mask, stitch_multi_to_one


def _add_config_flags(parser: argparse.ArgumentParser):
    grp = parser.add_argument_group("projection")
    grp.add_argument("--profile", default="cvusa",
                     choices=sorted(ds.PROFILES),
                     help="dataset profile supplying the projection constants")
    grp.add_argument("--lambda", dest="curvature", type=float, default=None,
                     help="curvature scale of the BEV surface (overrides profile)")
    grp.add_argument("--height", dest="camera_height", type=float, default=None,
                     help="camera height above ground (overrides profile)")
    grp.add_argument("--size", dest="grid_size", type=int, default=None,
                     help="BEV canvas side in pixels (= satellite side)")
    grp.add_argument("--pano-width", type=int, default=None)
    grp.add_argument("--pano-height", type=int, default=None)
    grp.add_argument("--norm-radius", type=float, default=None,
                     help="radial distance normalizer (default: center-to-corner)")
    grp.add_argument("--no-v-flip", action="store_true",
                     help="keep the formula-literal row orientation (nadir at row 0)")


def _config_from(args) -> BevConfig:
    overrides = dict(
        curvature=args.curvature,
        camera_height=args.camera_height,
        grid_size=args.grid_size,
        pano_width=args.pano_width,
        pano_height=args.pano_height,
        norm_radius=args.norm_radius,
    )
    if args.no_v_flip:
        overrides["v_flip"] = False
    return ds.profile_config(args.profile, **overrides)


def _resolve_threads(value) -> int:
    if value is None:
        env = os.environ.get("CBEV_THREADS")
        value = int(env) if env else (os.cpu_count() or 1)
    value = int(value)
    if value < 1:
        raise ValueError(f"thread count must be >= 1, got {value}")
    return value


def cmd_bev(args) -> int:
    if args.table:
        table = RemapTable.load(args.table)
    else:
        table = build_remap_table(_config_from(args))
    pano = load_image(args.pano)
    bev = apply_remap(pano, table)
    save_image(args.out, bev)
    return 0


def cmd_lut(args) -> int:
    table = build_remap_table(_config_from(args))
    table.save(args.out)
    return 0


def _scene_for_group(entries, cfg, table, group_id, margin, fill):
    groups = {s.group_id: s for s in ds.group_by_satellite(entries)}
    if group_id not in groups:
        raise ValueError(f"group {group_id!r} not found in manifest")
    scene = groups[group_id]
    cameras = []
    for placement, entry in zip(scene.placements(), scene.entries):
        bev = apply_remap(load_image(entry.pano_path), table)
        if entry.mask_path:
            mask = load_mask(entry.mask_path)
        else:
            mask = heuristic_occlusion_mask(cfg, table, margin)
        cameras.append((placement, bev, mask))
    return StitchScene(sat_size=cfg.grid_size, cameras=cameras, fill_color=fill)


def cmd_stitch(args) -> int:
    cfg = _config_from(args)
    entries = ds.load_manifest(args.manifest)
    table = build_remap_table(cfg)
    scene = _scene_for_group(
        entries, cfg, table, args.group, args.margin, tuple(args.fill)
    )
    canvas, coverage = stitch_multi_to_one(scene)
    if not coverage.any():
        print("warning: no camera covered any pixel; canvas is fill color",
              file=sys.stderr)
    save_image(args.out, canvas)
    if args.coverage:
        save_mask(args.coverage, coverage)
    return 0


def cmd_relight(args) -> int:
    content = to_float(load_image(args.image))
    reference = to_float(load_image(args.reference))
    if args.params:
        with open(args.params, "r", encoding="utf-8") as f:
            params = DncmParams.from_json(f.read())
    else:
        params = default_identity_params()
    canonical_img = to_float(load_image(args.canonical)) if args.canonical \
        else content
    canonical = compute_color_stats(canonical_img, params)
    out = relight(content, reference, canonical, params)
    save_image(args.out, out)
    return 0


def cmd_eval(args) -> int:
    entries = ds.load_manifest(args.manifest)
    report = metrics.evaluate_pairs(
        entries, args.generated, cap=99.0 if args.cap_psnr else None
    )
    with open(args.report, "w", encoding="utf-8") as f:
        f.write(report.to_json() + "\n")
    print(f"evaluated {len(report.pairs)} pairs, skipped {len(report.skipped)}")
    if report.skipped:
        for sid in report.skipped:
            print(f"skipped: {sid}", file=sys.stderr)
        return 1
    return 0


def cmd_export(args) -> int:
    cfg = _config_from(args)
    entries = ds.load_manifest(args.manifest)
    summary = ds.export_conditioning_set(
        entries, cfg, args.out, multi=args.multi,
        workers=_resolve_threads(args.threads),
    )
    print(f"exported {len(summary.written)} samples, "
          f"skipped {len(summary.skipped)}")
    if summary.skipped:
        for sid in summary.skipped:
            print(f"skipped: {sid}", file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    result = run_benchmark(_config_from(args), iterations=args.iterations)
    print(result.summary())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvedbev",
        description="curved BEV projection, stitching, relighting, and export",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bev", help="project one panorama to a BEV image")
    _add_config_flags(p)
    p.add_argument("pano", help="input panorama (PNG/JPEG)")
    p.add_argument("out", help="output BEV PNG")
    p.add_argument("--table", default=None,
                   help="load a precomputed remap table instead of building one")
    p.set_defaults(func=cmd_bev)

    p = sub.add_parser("lut", help="precompute and save a remap table")
    _add_config_flags(p)
    p.add_argument("out", help="output table file")
    p.set_defaults(func=cmd_lut)

    p = sub.add_parser("stitch", help="stitch one manifest group to a canvas")
    _add_config_flags(p)
    p.add_argument("manifest")
    p.add_argument("group", help="group id to stitch")
    p.add_argument("out")
    p.add_argument("--margin", type=float, default=0.05,
                   help="elevation margin for the built-in occlusion heuristic")
    p.add_argument("--fill", type=int, nargs=3, default=(128, 128, 128),
                   metavar=("R", "G", "B"))
    p.add_argument("--coverage", default=None,
                   help="also write the coverage mask PNG here")
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("relight", help="transfer reference lighting onto an image")
    p.add_argument("image")
    p.add_argument("reference")
    p.add_argument("out")
    p.add_argument("--params", default=None,
                   help="embedding/recovery matrices JSON (default: identity)")
    p.add_argument("--canonical", default=None,
                   help="image supplying canonical statistics for normalization")
    p.set_defaults(func=cmd_relight)

    p = sub.add_parser("eval", help="score generated images against a manifest")
    p.add_argument("manifest")
    p.add_argument("generated", help="directory of generated <id>.png files")
    p.add_argument("report", help="output JSON report path")
    p.add_argument("--cap-psnr", action="store_true",
                   help="cap PSNR at 99 dB instead of reporting inf")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="export a conditioning dataset")
    _add_config_flags(p)
    p.add_argument("manifest")
    p.add_argument("out", help="output dataset directory")
    p.add_argument("--multi", action="store_true",
                   help="stitch multi-camera groups instead of per-entry BEV")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: CBEV_THREADS or logical cores)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("bench", help="report remap throughput")
    _add_config_flags(p)
    p.add_argument("--iterations", type=int, default=50)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
