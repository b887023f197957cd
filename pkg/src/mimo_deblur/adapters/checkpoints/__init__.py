"""Checkpoint persistence."""

from mimo_deblur.adapters.checkpoints.binary_store import (
    Checkpoint,
    load_checkpoint,
    save_checkpoint,
)

__all__ = ["Checkpoint", "load_checkpoint", "save_checkpoint"]
