"""Random patch cropping, flip augmentation and batch assembly."""

from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from mimo_deblur.core.entities import LEVELS, ScalePyramid, TrainingSample
from mimo_deblur.core.errors import InputError, UsageError
from mimo_deblur.core.tensor import Tensor
from mimo_deblur.datapipe.pyramid import build_pyramid

ImagePair = tuple[np.ndarray, np.ndarray]


def hflip(image: np.ndarray) -> np.ndarray:
    """Mirror an (N, C, H, W) image left to right."""
    return np.ascontiguousarray(image[..., ::-1])


def sample_patch(
    pair: ImagePair,
    patch: int = 256,
    flip_prob: float = 0.5,
    rng: np.random.Generator | None = None,
) -> TrainingSample:
    """Cut the same ``patch`` x ``patch`` window out of both images and flip both or neither."""
    blurry, sharp = pair
    if blurry.shape != sharp.shape:
        raise InputError(f"Pair images differ in shape: {blurry.shape} vs {sharp.shape}")
    if blurry.ndim != 4:
        raise InputError(f"Expected (N, C, H, W) images, got shape {blurry.shape}")
    if rng is None:
        raise UsageError("sample_patch needs a numpy Generator")
    h, w = blurry.shape[2:]
    if h < patch or w < patch:
        raise InputError(f"Image {h}x{w} is smaller than the {patch}x{patch} patch")

    top = int(rng.integers(0, h - patch + 1))
    left = int(rng.integers(0, w - patch + 1))
    flipped = bool(rng.random() < flip_prob)

    window = (slice(None), slice(None), slice(top, top + patch), slice(left, left + patch))
    blurry_patch = blurry[window]
    sharp_patch = sharp[window]
    if flipped:
        blurry_patch, sharp_patch = hflip(blurry_patch), hflip(sharp_patch)
    else:
        blurry_patch = np.ascontiguousarray(blurry_patch)
        sharp_patch = np.ascontiguousarray(sharp_patch)

    return TrainingSample(
        blurry=build_pyramid(Tensor(blurry_patch), LEVELS, mode="input"),
        sharp=build_pyramid(Tensor(sharp_patch), LEVELS, mode="target"),
        offset=(top, left),
        flipped=flipped,
    )


def stack_samples(samples: Sequence[TrainingSample]) -> tuple[ScalePyramid, ScalePyramid]:
    """Concatenate samples along the batch axis, level by level."""
    if not samples:
        raise UsageError("Cannot stack an empty batch")

    def stack(pyramids: list[ScalePyramid], mode: str) -> ScalePyramid:
        levels = [
            Tensor(np.concatenate([p[k].data for p in pyramids], axis=0))
            for k in range(len(pyramids[0]))
        ]
        return ScalePyramid(levels=levels, mode=mode)

    return (
        stack([s.blurry for s in samples], "input"),
        stack([s.sharp for s in samples], "target"),
    )


class BatchSampler:
    """Draws batches with replacement from a list of image pairs.

    Each sample gets its own generator seeded from the root generator in draw
    order, so the batch contents do not depend on how many worker threads
    build them.
    """

    def __init__(
        self,
        pairs: Sequence[ImagePair],
        batch_size: int = 4,
        patch: int = 256,
        flip_prob: float = 0.5,
        threads: int = 1,
    ) -> None:
        if not pairs:
            raise InputError("Training corpus is empty")
        if batch_size < 1:
            raise UsageError(f"batch_size must be >= 1, got {batch_size}")
        self.pairs = list(pairs)
        self.batch_size = batch_size
        self.patch = patch
        self.flip_prob = flip_prob
        self.threads = max(threads, 1)

    def _draw(self, index: int, seed: int) -> TrainingSample:
        return sample_patch(
            self.pairs[index], self.patch, self.flip_prob, np.random.default_rng(seed)
        )

    def sample(self, rng: np.random.Generator) -> tuple[ScalePyramid, ScalePyramid]:
        """Return stacked (blurry, sharp) pyramids for one training step."""
        indices = rng.integers(0, len(self.pairs), size=self.batch_size)
        seeds = rng.integers(0, 2**63 - 1, size=self.batch_size)
        jobs = [(int(i), int(s)) for i, s in zip(indices, seeds)]
        if self.threads == 1:
            samples = [self._draw(i, s) for i, s in jobs]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                samples = list(pool.map(lambda job: self._draw(*job), jobs))
        return stack_samples(samples)
