"""Generate satellite images from condition images with a tuned checkpoint.

Sampling uses the DDIM strategy with classifier-free guidance.  Every
generated image gets a JSON sidecar recording the guidance scale, step
count, seed, and checkpoint, so runs are attributable and (per fixed
seed on one hardware/software stack) reproducible.
"""

from __future__ import annotations

import json
from pathlib import Path

from .config import BridgeConfig
from .data import EXPECTED_SIZE, image_size
from .train import require_gpu


def check_conditions(condition_paths) -> list[Path]:
    paths = [Path(p) for p in condition_paths]
    for path in paths:
        if not path.is_file():
            raise FileNotFoundError(f"condition image missing: {path}")
        width, height = image_size(path)
        if (width, height) != (EXPECTED_SIZE, EXPECTED_SIZE):
            raise ValueError(
                f"{path}: condition is {width}x{height}, "
                f"expected {EXPECTED_SIZE}x{EXPECTED_SIZE}"
            )
    return paths


def sample(config: BridgeConfig, checkpoint, condition_paths) -> list[Path]:
    """One 512x512 output per condition image; returns the written paths."""
    if not condition_paths:
        return []  # nothing to do
    paths = check_conditions(condition_paths)
    torch = require_gpu()
    from diffusers import (
        ControlNetModel,
        DDIMScheduler,
        StableDiffusionControlNetPipeline,
        UNet2DConditionModel,
    )
    from PIL import Image

    device = torch.device("cuda")
    state = torch.load(checkpoint, map_location=device)
    base_model = state.get("base_model", config.base_model)
    unet = UNet2DConditionModel.from_pretrained(base_model, subfolder="unet")
    control = ControlNetModel.from_unet(unet)
    control.load_state_dict(state["control"])
    pipe = StableDiffusionControlNetPipeline.from_pretrained(
        base_model, controlnet=control, safety_checker=None,
    )
    pipe.scheduler = DDIMScheduler.from_config(pipe.scheduler.config)
    pipe = pipe.to(device)

    out_dir = config.samples_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for index, path in enumerate(paths):
        generator = torch.Generator(device=device).manual_seed(
            config.seed + index
        )
        condition = Image.open(path).convert("RGB")
        result = pipe(
            prompt="satellite image, top-down aerial view",
            image=condition,
            num_inference_steps=config.steps,
            guidance_scale=config.guidance_scale,
            generator=generator,
        ).images[0]
        out_path = out_dir / f"{path.stem}.png"
        result.save(out_path)
        sidecar = {
            "condition": str(path),
            "guidance_scale": config.guidance_scale,
            "steps": config.steps,
            "sampler": "ddim",
            "seed": config.seed + index,
            "checkpoint": str(checkpoint),
            "base_model": base_model,
        }
        with open(out_dir / f"{path.stem}.json", "w", encoding="utf-8") as f:
            json.dump(sidecar, f, indent=2)
        written.append(out_path)
    return written
