from .checkpoint import checkpoint_load, checkpoint_save
from .model import DEFAULT_BLOCK_WIDTHS, DEFAULT_STEM_WIDTH, Model, NetConfig
from .optim import AdamW

__all__ = [
    "AdamW",
    "DEFAULT_BLOCK_WIDTHS",
    "DEFAULT_STEM_WIDTH",
    "Model",
    "NetConfig",
    "checkpoint_load",
    "checkpoint_save",
]
