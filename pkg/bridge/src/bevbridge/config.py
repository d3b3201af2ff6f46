"""Bridge run configuration, loadable from YAML with flag overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import yaml

DEFAULT_BASE_MODEL = "runwayml/stable-diffusion-v1-5"


@dataclass
class BridgeConfig:
    conditioning_set: str = ""
    base_model: str = DEFAULT_BASE_MODEL
    guidance_scale: float = 9.0
    steps: int = 50          # DDIM sampling steps
    batch_size: int = 4
    epochs: int = 1
    max_steps: int | None = None   # optional hard cap for smoke runs
    learning_rate: float = 1e-5
    checkpoint_every: int = 500
    seed: int = 0
    output_dir: str = "bridge-out"

    def __post_init__(self):
        if self.guidance_scale < 1.0:
            raise ValueError(
                f"guidance scale must be >= 1, got {self.guidance_scale}"
            )
        if self.steps < 1:
            raise ValueError(f"sampler steps must be >= 1, got {self.steps}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")

    @classmethod
    def from_yaml(cls, path, **overrides) -> "BridgeConfig":
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a mapping at the top level")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def checkpoint_dir(self) -> Path:
        return Path(self.output_dir) / "checkpoints"

    def samples_dir(self) -> Path:
        return Path(self.output_dir) / "samples"
