"""Fine-tune the conditioning branch of a latent diffusion model.

The base model's encoder and middle blocks are replicated into a
control branch (zero-convolution injection), which is then trained to
predict the noise added to satellite-image latents given the BEV
condition image and a fixed caption.  The base UNet, VAE, and text
encoder stay frozen.

Requires a CUDA device and the optional ml dependencies (torch,
diffusers, transformers); without a GPU the entry point refuses with a
clear message instead of attempting a CPU run.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

from .config import BridgeConfig
from .data import load_sample, read_index
from .validate import validate_conditioning_set


class GpuUnavailableError(RuntimeError):
    """Raised when training is requested without a usable CUDA device."""


def require_gpu():
    try:
        import torch
    except ImportError as exc:
        raise GpuUnavailableError(
            "training requires the optional ml dependencies "
            "(pip install 'bevbridge[ml]')"
        ) from exc
    if not torch.cuda.is_available():
        raise GpuUnavailableError(
            "training requires a CUDA device; none is available. "
            "Run on GPU hardware or skip the training stage."
        )
    return torch


def _load_models(base_model: str, device):
    from diffusers import (
        AutoencoderKL,
        ControlNetModel,
        DDPMScheduler,
        UNet2DConditionModel,
    )
    from transformers import CLIPTextModel, CLIPTokenizer

    tokenizer = CLIPTokenizer.from_pretrained(base_model, subfolder="tokenizer")
    text_encoder = CLIPTextModel.from_pretrained(
        base_model, subfolder="text_encoder"
    ).to(device)
    vae = AutoencoderKL.from_pretrained(base_model, subfolder="vae").to(device)
    unet = UNet2DConditionModel.from_pretrained(
        base_model, subfolder="unet"
    ).to(device)
    control = ControlNetModel.from_unet(unet).to(device)
    scheduler = DDPMScheduler.from_pretrained(base_model, subfolder="scheduler")
    for frozen in (vae, text_encoder, unet):
        frozen.requires_grad_(False)
    return tokenizer, text_encoder, vae, unet, control, scheduler


def _batches(items, size):
    for start in range(0, len(items), size):
        yield items[start:start + size]


def _to_latent_input(torch, images, device):
    import numpy as np

    arr = np.stack(images).astype("float32") / 255.0
    tensor = torch.from_numpy(arr).permute(0, 3, 1, 2).to(device)
    return tensor * 2.0 - 1.0  # VAE expects [-1, 1]


def _to_condition_input(torch, images, device):
    import numpy as np

    arr = np.stack(images).astype("float32") / 255.0
    return torch.from_numpy(arr).permute(0, 3, 1, 2).to(device)


def train(config: BridgeConfig, resume_from=None) -> Path:
    """Run the fine-tune and return the final checkpoint path.

    Checkpoints land in <output_dir>/checkpoints every
    ``checkpoint_every`` optimizer steps and at the end; resuming from a
    checkpoint continues its step counter.
    """
    torch = require_gpu()
    report = validate_conditioning_set(config.conditioning_set)
    if not report.ok:
        raise ValueError(
            "conditioning set failed validation:\n" + report.summary()
        )
    records = read_index(config.conditioning_set)
    device = torch.device("cuda")
    tokenizer, text_encoder, vae, unet, control, scheduler = _load_models(
        config.base_model, device
    )
    optimizer = torch.optim.AdamW(control.parameters(), lr=config.learning_rate)

    step = 0
    if resume_from is not None:
        state = torch.load(resume_from, map_location=device)
        control.load_state_dict(state["control"])
        optimizer.load_state_dict(state["optimizer"])
        step = int(state["step"])

    ckpt_dir = config.checkpoint_dir()
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    generator = torch.Generator(device=device).manual_seed(config.seed)
    scaling = vae.config.scaling_factor

    def save_checkpoint(tag) -> Path:
        path = ckpt_dir / f"control-{tag}.pt"
        torch.save({
            "control": control.state_dict(),
            "optimizer": optimizer.state_dict(),
            "step": step,
            "base_model": config.base_model,
        }, path)
        return path

    control.train()
    done = False
    t0 = time.time()
    for epoch in range(config.epochs):
        if done:
            break
        for batch in _batches(records, config.batch_size):
            conditions, targets, captions = [], [], []
            for record in batch:
                cond, targ, caption = load_sample(
                    config.conditioning_set, record
                )
                conditions.append(cond)
                targets.append(targ)
                captions.append(caption)

            latents = vae.encode(
                _to_latent_input(torch, targets, device)
            ).latent_dist.sample(generator) * scaling
            noise = torch.randn(
                latents.shape, generator=generator, device=device
            )
            timesteps = torch.randint(
                0, scheduler.config.num_train_timesteps,
                (latents.shape[0],), generator=generator, device=device,
            )
            noisy = scheduler.add_noise(latents, noise, timesteps)

            tokens = tokenizer(
                captions, padding="max_length",
                max_length=tokenizer.model_max_length,
                truncation=True, return_tensors="pt",
            ).input_ids.to(device)
            text_embeddings = text_encoder(tokens)[0]

            down_res, mid_res = control(
                noisy, timesteps,
                encoder_hidden_states=text_embeddings,
                controlnet_cond=_to_condition_input(torch, conditions, device),
                return_dict=False,
            )
            pred = unet(
                noisy, timesteps,
                encoder_hidden_states=text_embeddings,
                down_block_additional_residuals=down_res,
                mid_block_additional_residual=mid_res,
            ).sample
            loss = torch.nn.functional.mse_loss(pred, noise)

            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            step += 1
            print(f"step {step}: loss {loss.item():.5f} "
                  f"({time.time() - t0:.0f}s)")
            if step % config.checkpoint_every == 0:
                save_checkpoint(f"{step:07d}")
            if config.max_steps is not None and step >= config.max_steps:
                done = True
                break

    final = save_checkpoint("final")
    meta = {
        "steps": step,
        "epochs": config.epochs,
        "samples": len(records),
        "base_model": config.base_model,
    }
    with open(ckpt_dir / "training.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
    return final
