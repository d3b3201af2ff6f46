"""Fixture helpers for conditioning-set layouts."""

import json

import numpy as np
import pytest
from PIL import Image


def write_png(path, size=512, value=(90, 120, 60)):
    arr = np.zeros((size, size, 3), dtype=np.uint8)
    arr[:, :] = value
    arr[::16, :] = 255  # cheap structure so files are not degenerate
    Image.fromarray(arr, mode="RGB").save(path)


def make_conditioning_set(root, ids, size=512, caption="satellite image"):
    (root / "conditions").mkdir(parents=True)
    (root / "targets").mkdir(parents=True)
    records = []
    for sid in ids:
        write_png(root / "conditions" / f"{sid}.png", size)
        write_png(root / "targets" / f"{sid}.png", size, value=(40, 40, 80))
        records.append({
            "id": sid,
            "condition": f"conditions/{sid}.png",
            "target": f"targets/{sid}.png",
            "caption": caption,
        })
    with open(root / "index.jsonl", "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record) + "\n")
    return records


@pytest.fixture
def valid_set(tmp_path):
    root = tmp_path / "condset"
    make_conditioning_set(root, ["a", "b", "c"])
    return root
