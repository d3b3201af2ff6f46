"""Command-line driver: validate / train / sample.

Exit codes: 0 success, 1 runtime or data error (including missing GPU),
2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .config import BridgeConfig
from .sample import sample
from .train import GpuUnavailableError, train
from .validate import validate_conditioning_set


def _config_from(args) -> BridgeConfig:
    overrides = dict(
        conditioning_set=getattr(args, "conditioning_set", None),
        base_model=args.base_model,
        guidance_scale=args.guidance,
        steps=args.steps,
        batch_size=args.batch_size,
        epochs=args.epochs,
        max_steps=args.max_steps,
        seed=args.seed,
        output_dir=args.output,
    )
    if args.config:
        return BridgeConfig.from_yaml(args.config, **overrides)
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    return BridgeConfig(**cleaned)


def _add_run_flags(parser):
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--base-model", default=None)
    parser.add_argument("--guidance", type=float, default=None)
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--max-steps", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--output", default=None)


def cmd_validate(args) -> int:
    report = validate_conditioning_set(args.conditioning_set)
    print(report.summary())
    return 0 if report.ok else 1


def cmd_train(args) -> int:
    config = _config_from(args)
    checkpoint = train(config, resume_from=args.resume)
    print(f"final checkpoint: {checkpoint}")
    return 0


def cmd_sample(args) -> int:
    config = _config_from(args)
    written = sample(config, args.checkpoint, args.conditions)
    if not written:
        print("no condition images given; nothing to do")
        return 0
    for path in written:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bevbridge",
        description="fine-tune and sample a conditioned diffusion model "
                    "on exported BEV conditioning sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a conditioning set")
    p.add_argument("conditioning_set")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="fine-tune the conditioning branch (GPU)")
    p.add_argument("conditioning_set")
    _add_run_flags(p)
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="generate satellite images (GPU)")
    p.add_argument("checkpoint")
    p.add_argument("conditions", nargs="*",
                   help="condition image paths (512x512)")
    _add_run_flags(p)
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GpuUnavailableError as exc:
        print(f"refusing to run: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
