"""Corpus ingestion: blur synthesis, pyramids, patch sampling, manifests."""

from mimo_deblur.datapipe.manifest import (
    load_manifest,
    load_pair,
    load_sequence,
    validate_manifest,
)
from mimo_deblur.datapipe.pyramid import build_pyramid, downsample
from mimo_deblur.datapipe.sampling import BatchSampler, hflip, sample_patch, stack_samples
from mimo_deblur.datapipe.synthesis import sliding_pairs, synthesize_blur

__all__ = [
    "BatchSampler",
    "build_pyramid",
    "downsample",
    "hflip",
    "load_manifest",
    "load_pair",
    "load_sequence",
    "sample_patch",
    "sliding_pairs",
    "stack_samples",
    "synthesize_blur",
    "validate_manifest",
]
