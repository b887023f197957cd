"""Scale pyramids by successive bilinear halving."""

import numpy as np

from mimo_deblur.core.entities import LEVELS, ScalePyramid
from mimo_deblur.core.errors import InputError
from mimo_deblur.core.ops import resize_bilinear
from mimo_deblur.core.tensor import Tensor

PYRAMID_MODES = ("input", "target")


def downsample(image: Tensor) -> Tensor:
    """Halve height and width with half-pixel aligned bilinear sampling."""
    h, w = image.shape[2:]
    return resize_bilinear(image, h // 2, w // 2)


def build_pyramid(
    image: Tensor | np.ndarray, levels: int = LEVELS, mode: str = "input"
) -> ScalePyramid:
    """Return ``levels`` images, each half the size of the previous one.

    Inputs and targets go through the same downsampler; ``mode`` only tags
    the result.
    """
    if mode not in PYRAMID_MODES:
        raise InputError(f"Unknown pyramid mode {mode!r}; expected one of {PYRAMID_MODES}")
    if not isinstance(image, Tensor):
        image = Tensor(image, dtype=np.asarray(image).dtype)
    if image.ndim != 4:
        raise InputError(f"Expected an (N, C, H, W) image, got shape {image.shape}")
    factor = 2 ** (levels - 1)
    h, w = image.shape[2:]
    if h % factor or w % factor:
        raise InputError(
            f"Image size {h}x{w} is not divisible by {factor}; pad it first"
        )
    pyramid = [image]
    for _ in range(levels - 1):
        pyramid.append(downsample(pyramid[-1]))
    return ScalePyramid(levels=pyramid, mode=mode)
