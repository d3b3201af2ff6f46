"""Bridge from exported BEV conditioning sets to a ControlNet-style
latent diffusion model: validation, fine-tuning, and sampling."""

from .config import BridgeConfig
from .data import IndexRecord, load_sample, read_index
from .validate import ValidationReport, validate_conditioning_set

__version__ = "0.1.0"

__all__ = [
    "BridgeConfig",
    "IndexRecord",
    "ValidationReport",
    "load_sample",
    "read_index",
    "validate_conditioning_set",
]
