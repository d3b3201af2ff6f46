"""Manifest-based ingestion of cross-view pairs and conditioning-set export.

The ingestion boundary is a JSONL manifest: one JSON object per line with
the fields of ManifestEntry.  Center-aligned one-to-one collections carry
dx = dy = 0 and one group per entry; collections where several panoramas
cover one satellite tile share a group_id and get stitched.

Exported conditioning sets follow the layout

    out_dir/conditions/<id>.png   BEV (or stitched BEV) condition image
    out_dir/targets/<id>.png      satellite target image
    out_dir/index.jsonl           {id, condition, target, caption} per line

with a constant caption, so repeated exports of the same inputs are
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import BevConfig, build_remap_table, apply_remap
from .images import load_image, load_mask, save_image
from .stitch import CameraPlacement, StitchScene, heuristic_occlusion_mask, \
    stitch_multi_to_one

CAPTION = "satellite image, top-down aerial view"
VALID_SPLITS = ("train", "test")

# constants per dataset profile: curvature, camera height, canvas/pano sizes
PROFILES = {
    "cvusa": dict(grid_size=512, curvature=3.0, camera_height=1.5,
                  pano_width=1024, pano_height=512),
    "cvact": dict(grid_size=512, curvature=3.0, camera_height=1.5,
                  pano_width=1024, pano_height=512),
    "vigor": dict(grid_size=512, curvature=10.0, camera_height=1.5,
                  pano_width=1024, pano_height=512),
}


def profile_config(name: str, **overrides) -> BevConfig:
    """BevConfig for a named dataset profile; overrides win over the profile."""
    try:
        base = dict(PROFILES[name.lower()])
    except KeyError:
        raise ValueError(
            f"unknown profile {name!r}; expected one of {sorted(PROFILES)}"
        ) from None
    base.update({k: v for k, v in overrides.items() if v is not None})
    return BevConfig(**base)


@dataclass(frozen=True)
class ManifestEntry:
    """One cross-view sample."""

    id: str
    pano_path: str
    sat_path: str
    split: str
    dx: float = 0.0
    dy: float = 0.0
    mask_path: str | None = None
    group_id: str | None = None

    def __post_init__(self):
        for name in ("id", "pano_path", "sat_path"):
            if not getattr(self, name):
                raise ValueError(f"manifest field {name!r} must be non-empty")
        if self.split not in VALID_SPLITS:
            raise ValueError(
                f"split must be one of {VALID_SPLITS}, got {self.split!r}"
            )
        if self.group_id is None:
            object.__setattr__(self, "group_id", self.id)

    def to_json(self) -> str:
        obj = {
            "id": self.id,
            "pano_path": self.pano_path,
            "sat_path": self.sat_path,
            "split": self.split,
            "dx": self.dx,
            "dy": self.dy,
        }
        if self.mask_path is not None:
            obj["mask_path"] = self.mask_path
        if self.group_id != self.id:
            obj["group_id"] = self.group_id
        return json.dumps(obj)


REQUIRED_FIELDS = ("id", "pano_path", "sat_path", "split")


def load_manifest(path) -> list[ManifestEntry]:
    """Parse and validate a JSONL manifest; duplicate ids are rejected."""
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise ValueError(f"{path}:{lineno}: expected a JSON object")
            for name in REQUIRED_FIELDS:
                if name not in obj:
                    raise ValueError(
                        f"{path}:{lineno}: missing required field {name!r}"
                    )
            known = {
                "id", "pano_path", "sat_path", "split",
                "dx", "dy", "mask_path", "group_id",
            }
            extra = set(obj) - known
            if extra:
                raise ValueError(
                    f"{path}:{lineno}: unknown fields {sorted(extra)}"
                )
            try:
                entry = ManifestEntry(**obj)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if entry.id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate id {entry.id!r}")
            seen.add(entry.id)
            entries.append(entry)
    return entries


@dataclass
class SceneDescriptor:
    """One satellite tile plus the panoramas that cover it."""

    group_id: str
    sat_path: str
    entries: list = field(default_factory=list)

    def placements(self) -> list[CameraPlacement]:
        return [
            CameraPlacement(index=i, dx=e.dx, dy=e.dy)
            for i, e in enumerate(self.entries)
        ]


def group_by_satellite(entries) -> list[SceneDescriptor]:
    """Group entries sharing a group_id into stitch-scene descriptors."""
    scenes: dict[str, SceneDescriptor] = {}
    order = []
    for entry in entries:
        scene = scenes.get(entry.group_id)
        if scene is None:
            scene = SceneDescriptor(group_id=entry.group_id, sat_path=entry.sat_path)
            scenes[entry.group_id] = scene
            order.append(entry.group_id)
        elif scene.sat_path != entry.sat_path:
            raise ValueError(
                f"group {entry.group_id!r} mixes satellite images "
                f"{scene.sat_path!r} and {entry.sat_path!r}"
            )
        scene.entries.append(entry)
    return [scenes[g] for g in order]


def build_condition_one(entry: ManifestEntry, table):
    """Condition image for a center-aligned entry: the panorama's BEV."""
    pano = load_image(entry.pano_path)
    return apply_remap(pano, table)


def build_condition_multi(scene: SceneDescriptor, cfg: BevConfig, table):
    """Condition image for a multi-camera group: the stitched BEV canvas."""
    cameras = []
    for placement, entry in zip(scene.placements(), scene.entries):
        pano = load_image(entry.pano_path)
        bev = apply_remap(pano, table)
        if entry.mask_path:
            mask = load_mask(entry.mask_path)
        else:
            mask = heuristic_occlusion_mask(cfg, table)
        cameras.append((placement, bev, mask))
    scene_obj = StitchScene(sat_size=cfg.grid_size, cameras=cameras)
    canvas, _ = stitch_multi_to_one(scene_obj)
    return canvas


@dataclass
class ExportSummary:
    written: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.skipped


def export_conditioning_set(entries, cfg: BevConfig, out_dir,
                            multi: bool = False,
                            workers: int = 1) -> ExportSummary:
    """Write condition/target pairs plus an index for an external synthesizer.

    Unreadable samples are skipped and listed in the summary rather than
    aborting the batch.  Output bytes are a pure function of the inputs.
    """
    from concurrent.futures import ThreadPoolExecutor

    out_dir = Path(out_dir)
    cond_dir = out_dir / "conditions"
    targ_dir = out_dir / "targets"
    cond_dir.mkdir(parents=True, exist_ok=True)
    targ_dir.mkdir(parents=True, exist_ok=True)
    table = build_remap_table(cfg)
    table._sampling_indices()  # shared read-only across workers

    if multi:
        items = [(s.group_id, s) for s in group_by_satellite(entries)]
    else:
        items = [(e.id, e) for e in entries]

    summary = ExportSummary()

    def process(item):
        sample_id, payload = item
        try:
            if multi:
                condition = build_condition_multi(payload, cfg, table)
                sat = load_image(payload.sat_path)
            else:
                condition = build_condition_one(payload, table)
                sat = load_image(payload.sat_path)
            save_image(cond_dir / f"{sample_id}.png", condition)
            save_image(targ_dir / f"{sample_id}.png", sat)
            return sample_id, None
        except (OSError, ValueError) as exc:
            return sample_id, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(process, items))
    else:
        results = [process(item) for item in items]

    for sample_id, err in results:
        if err is None:
            summary.written.append(sample_id)
        else:
            summary.skipped.append(sample_id)

    index_path = out_dir / "index.jsonl"
    with open(index_path, "w", encoding="utf-8") as f:
        for sample_id in summary.written:
            f.write(json.dumps({
                "id": sample_id,
                "condition": f"conditions/{sample_id}.png",
                "target": f"targets/{sample_id}.png",
                "caption": CAPTION,
            }) + "\n")
    return summary
