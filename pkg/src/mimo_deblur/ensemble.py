"""Geometric self-ensemble and the reflect-padding policy for inference."""

from typing import Callable, Iterator

import numpy as np

from mimo_deblur.core.errors import InputError
from mimo_deblur.core.interfaces import Restorer

SIZE_MULTIPLE = 4

Transform = Callable[[np.ndarray], np.ndarray]


def pad_to_multiple(image: np.ndarray, multiple: int = SIZE_MULTIPLE) -> tuple[np.ndarray, tuple[int, int]]:
    """Reflect-pad H and W at the bottom/right up to ``multiple``; returns the original size."""
    if image.ndim != 4:
        raise InputError(f"Expected an (N, C, H, W) image, got shape {image.shape}")
    h, w = image.shape[2:]
    pad_h = -h % multiple
    pad_w = -w % multiple
    if not pad_h and not pad_w:
        return image, (h, w)
    if pad_h >= h or pad_w >= w:
        raise InputError(f"Image {h}x{w} is too small to reflect-pad to a multiple of {multiple}")
    padded = np.pad(image, ((0, 0), (0, 0), (0, pad_h), (0, pad_w)), mode="reflect")
    return padded, (h, w)


def crop_to(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    h, w = size
    if image.shape[2:] == (h, w):
        return image
    return image[:, :, :h, :w]


class PaddedRestorer(Restorer):
    """Pads inputs to a multiple of four, restores, and crops back."""

    def __init__(self, inner: Restorer) -> None:
        self.inner = inner

    def restore(self, blurry: np.ndarray) -> np.ndarray:
        padded, size = pad_to_multiple(blurry)
        return crop_to(self.inner.restore(padded), size)


def geometric_transforms() -> Iterator[tuple[Transform, Transform]]:
    """The eight (transform, inverse) pairs: four rotations, each with and without a horizontal flip."""
    for flip in (False, True):
        for turns in range(4):

            def forward(x: np.ndarray, turns: int = turns, flip: bool = flip) -> np.ndarray:
                if flip:
                    x = x[..., ::-1]
                return np.rot90(x, turns, axes=(2, 3))

            def inverse(y: np.ndarray, turns: int = turns, flip: bool = flip) -> np.ndarray:
                y = np.rot90(y, -turns, axes=(2, 3))
                return y[..., ::-1] if flip else y

            yield forward, inverse


def self_ensemble_infer(restorer: Restorer, blurry: np.ndarray) -> np.ndarray:
    """Average the inverse-transformed outputs for all eight geometric variants of the input.

    The sum runs in float64 so averaging eight identical results is exact.
    """
    padded, size = pad_to_multiple(blurry)
    accumulated = np.zeros(padded.shape, dtype=np.float64)
    count = 0
    for forward, inverse in geometric_transforms():
        output = restorer.restore(np.ascontiguousarray(forward(padded)))
        accumulated += inverse(output)
        count += 1
    result = (accumulated / count).astype(blurry.dtype)
    return crop_to(result, size)


class EnsembleRestorer(Restorer):
    """Restorer adapter that applies :func:`self_ensemble_infer`."""

    def __init__(self, inner: Restorer) -> None:
        self.inner = inner

    def restore(self, blurry: np.ndarray) -> np.ndarray:
        return self_ensemble_infer(self.inner, blurry)
