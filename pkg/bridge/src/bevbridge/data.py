"""Read-only access to exported conditioning sets.

A conditioning set is a directory with conditions/, targets/, and an
index.jsonl whose lines carry {id, condition, target, caption} with paths
relative to the set root.  This module never writes into the set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

INDEX_NAME = "index.jsonl"
REQUIRED_KEYS = ("id", "condition", "target", "caption")
EXPECTED_SIZE = 512


@dataclass(frozen=True)
class IndexRecord:
    id: str
    condition: str
    target: str
    caption: str


def read_index(root) -> list[IndexRecord]:
    """Parse index.jsonl; malformed lines raise with their line number."""
    root = Path(root)
    index_path = root / INDEX_NAME
    if not index_path.is_file():
        raise FileNotFoundError(f"{index_path} not found")
    records = []
    seen = set()
    with open(index_path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(
                    f"{index_path}:{lineno}: malformed JSON: {exc}"
                ) from None
            missing = [k for k in REQUIRED_KEYS if k not in obj]
            if missing:
                raise ValueError(
                    f"{index_path}:{lineno}: missing keys {missing}"
                )
            if obj["id"] in seen:
                raise ValueError(
                    f"{index_path}:{lineno}: duplicate id {obj['id']!r}"
                )
            seen.add(obj["id"])
            records.append(IndexRecord(
                id=str(obj["id"]), condition=str(obj["condition"]),
                target=str(obj["target"]), caption=str(obj["caption"]),
            ))
    return records


def load_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def image_size(path) -> tuple[int, int]:
    """(width, height) without decoding the pixel data."""
    with Image.open(path) as im:
        return im.size


def load_sample(root, record: IndexRecord):
    """Condition and target arrays plus the caption for one record."""
    root = Path(root)
    condition = load_rgb(root / record.condition)
    target = load_rgb(root / record.target)
    return condition, target, record.caption
