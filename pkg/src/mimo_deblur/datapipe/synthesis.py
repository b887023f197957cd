"""Blur-pair synthesis by averaging consecutive sharp frames."""

from typing import Iterator

import numpy as np

from mimo_deblur.core.entities import FrameSequence
from mimo_deblur.core.errors import InputError


def synthesize_blur(
    seq: FrameSequence, frames_per_blur: int, start: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Return (blurry, sharp) from ``frames_per_blur`` frames beginning at ``start``.

    The blurry image is the per-pixel mean of the window, the sharp image its
    middle frame. The window length must be odd so the middle is unique.
    """
    if frames_per_blur < 1 or frames_per_blur % 2 == 0:
        raise InputError(f"Frames per blur must be a positive odd number, got {frames_per_blur}")
    if start < 0 or start + frames_per_blur > len(seq):
        raise InputError(
            f"Need {frames_per_blur} frames from index {start}, sequence has {len(seq)}"
        )
    window = seq.frames[start : start + frames_per_blur]
    dtype = window[0].dtype
    accumulated = np.zeros(window[0].shape, dtype=np.float64)
    for frame in window:
        accumulated += frame
    blurry = (accumulated / frames_per_blur).astype(dtype)
    sharp = window[(frames_per_blur - 1) // 2].copy()
    return blurry, sharp


def sliding_pairs(
    seq: FrameSequence, frames_per_blur: int, stride: int | None = None
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield (start, blurry, sharp) for non-overlapping windows by default."""
    if stride is None:
        stride = frames_per_blur
    if stride < 1:
        raise InputError(f"Window stride must be >= 1, got {stride}")
    for start in range(0, len(seq) - frames_per_blur + 1, stride):
        blurry, sharp = synthesize_blur(seq, frames_per_blur, start)
        yield start, blurry, sharp
