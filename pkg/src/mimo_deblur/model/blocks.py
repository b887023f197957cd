"""Sub-modules of the multi-input multi-output U-Net.

Channel widths are fixed by :class:`ModelConfig`: level k carries
``base_channels * 2**(k-1)`` feature maps.
"""

from typing import Optional

import numpy as np

from mimo_deblur.core import ops
from mimo_deblur.core.entities import FusionMode, ModelConfig
from mimo_deblur.core.errors import ConfigurationError, UsageError
from mimo_deblur.core.tensor import Tensor
from mimo_deblur.model.layers import Conv2d, ConvTranspose2d, Module, ResStack

IMAGE_CHANNELS = 3


class ShallowConvModule(Module):
    """SCM: features straight from a downsampled blurry image.

    (3x3 conv, ReLU, 1x1 conv, ReLU) twice, concatenation with the image,
    then a 1x1 refinement to the level width. Inner widths follow C/4, C/2,
    C/2, C-3 and never drop below one channel.
    """

    def __init__(
        self, channels: int, init: str = "uniform", rng: Optional[np.random.Generator] = None
    ) -> None:
        quarter = max(channels // 4, 1)
        half = max(channels // 2, 1)
        last = max(channels - IMAGE_CHANNELS, 1)
        self.channels = channels
        self.conv1 = Conv2d(IMAGE_CHANNELS, quarter, 3, relu=True, init=init, rng=rng)
        self.conv2 = Conv2d(quarter, half, 1, relu=True, init=init, rng=rng)
        self.conv3 = Conv2d(half, half, 3, relu=True, init=init, rng=rng)
        self.conv4 = Conv2d(half, last, 1, relu=True, init=init, rng=rng)
        self.refine = Conv2d(last + IMAGE_CHANNELS, channels, 1, relu=False, init=init, rng=rng)

    def forward(self, image: Tensor) -> Tensor:
        if image.ndim != 4 or image.shape[1] != IMAGE_CHANNELS:
            raise ConfigurationError(
                f"SCM expects an (N, {IMAGE_CHANNELS}, H, W) image, got {image.shape}"
            )
        features = self.conv4(self.conv3(self.conv2(self.conv1(image))))
        return self.refine(ops.concat_channels(features, image))


class FeatureAttention(Module):
    """FAM: ``eb_down + conv3x3(eb_down * scm_out)``."""

    def __init__(
        self, channels: int, init: str = "uniform", rng: Optional[np.random.Generator] = None
    ) -> None:
        self.merge = Conv2d(channels, channels, 3, relu=False, init=init, rng=rng)

    def forward(self, eb_down: Tensor, scm_out: Tensor) -> Tensor:
        if eb_down.shape != scm_out.shape:
            raise ConfigurationError(
                f"FAM inputs differ in shape: {eb_down.shape} vs {scm_out.shape}"
            )
        return ops.add(eb_down, self.merge(ops.mul(eb_down, scm_out)))


class FeatureFusion(Module):
    """Merge strided encoder features with SCM features by FAM, concat+1x1 or sum."""

    def __init__(
        self,
        channels: int,
        mode: FusionMode | str = FusionMode.FAM,
        init: str = "uniform",
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        try:
            self.mode = FusionMode(mode)
        except ValueError:
            raise ConfigurationError(f"Unknown fusion mode {mode!r}") from None
        if self.mode is FusionMode.FAM:
            self.attention = FeatureAttention(channels, init=init, rng=rng)
        elif self.mode is FusionMode.CONCAT:
            self.squeeze = Conv2d(2 * channels, channels, 1, relu=False, init=init, rng=rng)

    def forward(self, eb_down: Tensor, scm_out: Tensor) -> Tensor:
        if eb_down.shape != scm_out.shape:
            raise ConfigurationError(
                f"Fusion inputs differ in shape: {eb_down.shape} vs {scm_out.shape}"
            )
        if self.mode is FusionMode.FAM:
            return self.attention(eb_down, scm_out)
        if self.mode is FusionMode.CONCAT:
            return self.squeeze(ops.concat_channels(eb_down, scm_out))
        return ops.add(eb_down, scm_out)


class AsymmetricFeatureFusion(Module):
    """AFF for decoder level 1 or 2: resize all encoder outputs, concat, 1x1 then 3x3."""

    def __init__(
        self,
        level: int,
        config: ModelConfig,
        init: str = "uniform",
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        if level not in (1, 2):
            raise UsageError(
                f"AFF exists for levels 1 and 2 only; level {level} uses its encoder output directly"
            )
        self.level = level
        width = config.channels(level)
        fused = sum(config.channels(k) for k in range(1, config.levels + 1))
        self.squeeze = Conv2d(fused, width, 1, relu=True, init=init, rng=rng)
        self.mix = Conv2d(width, width, 3, relu=False, init=init, rng=rng)

    def forward(self, eb1: Tensor, eb2: Tensor, eb3: Tensor) -> Tensor:
        target = (eb1, eb2, eb3)[self.level - 1]
        h, w = target.shape[2:]
        resized = [ops.resize_bilinear(features, h, w) for features in (eb1, eb2, eb3)]
        stacked = ops.concat_channels(ops.concat_channels(resized[0], resized[1]), resized[2])
        return self.mix(self.squeeze(stacked))


class EncoderBlock(Module):
    """EB_k: feature extraction (level 1) or strided conv plus optional image fusion, then residual stack."""

    def __init__(
        self,
        level: int,
        config: ModelConfig,
        init: str = "uniform",
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        self.level = level
        width = config.channels(level)
        if level == 1:
            self.stem = Conv2d(IMAGE_CHANNELS, width, 3, relu=True, init=init, rng=rng)
        else:
            self.stem = Conv2d(config.channels(level - 1), width, 3, stride=2, relu=True, init=init, rng=rng)
            if config.enable_mise:
                self.scm = ShallowConvModule(width, init=init, rng=rng)
                self.fusion = FeatureFusion(width, config.fusion, init=init, rng=rng)
        self.body = ResStack(width, config.num_resblocks, init=init, rng=rng)

    @property
    def uses_image(self) -> bool:
        return hasattr(self, "scm")

    def forward(self, features: Tensor, image: Optional[Tensor] = None) -> Tensor:
        """Level 1 takes B_1 as ``features``; deeper levels take EB_(k-1) output and B_k."""
        x = self.stem(features)
        if self.uses_image:
            if image is None:
                raise UsageError(f"Encoder level {self.level} needs its downsampled image")
            x = self.fusion(x, self.scm(image))
        return self.body(x)


class DecoderBlock(Module):
    """DB_n: level 3 refines EB_3 output; shallower levels merge skip and upsampled deeper features."""

    def __init__(
        self,
        level: int,
        config: ModelConfig,
        init: str = "uniform",
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        self.level = level
        width = config.channels(level)
        if level < config.levels:
            self.up = ConvTranspose2d(config.channels(level + 1), width, relu=True, init=init, rng=rng)
            self.merge = Conv2d(2 * width, width, 1, relu=True, init=init, rng=rng)
        self.body = ResStack(width, config.num_resblocks, init=init, rng=rng)

    def forward(self, skip: Tensor, deeper: Optional[Tensor] = None) -> Tensor:
        if not hasattr(self, "up"):
            return self.body(skip)
        if deeper is None:
            raise UsageError(f"Decoder level {self.level} needs the deeper decoder output")
        upsampled = self.up(deeper)
        return self.body(self.merge(ops.concat_channels(upsampled, skip)))
