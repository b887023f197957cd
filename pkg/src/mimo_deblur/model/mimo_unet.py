"""The assembled multi-input multi-output U-Net."""

from typing import Optional

import numpy as np

from mimo_deblur.core import ops
from mimo_deblur.core.entities import ModelConfig
from mimo_deblur.core.errors import InputError
from mimo_deblur.core.interfaces import Restorer
from mimo_deblur.core.tensor import Tensor, no_grad
from mimo_deblur.datapipe.pyramid import build_pyramid
from mimo_deblur.model.blocks import (
    IMAGE_CHANNELS,
    AsymmetricFeatureFusion,
    DecoderBlock,
    EncoderBlock,
)
from mimo_deblur.model.layers import Conv2d, Module


class MimoUNet(Module):
    """Single encoder/decoder that reads a blurry pyramid and emits one estimate per level.

    Each estimate is ``head(DB_n) + B_n``; with every weight and bias zero the
    network returns its input pyramid unchanged.
    """

    def __init__(
        self,
        config: ModelConfig,
        rng: Optional[np.random.Generator] = None,
        init: str = "uniform",
    ) -> None:
        self.config = config
        levels = range(1, config.levels + 1)
        self.encoders = [EncoderBlock(k, config, init=init, rng=rng) for k in levels]
        if config.enable_aff:
            self.affs = [AsymmetricFeatureFusion(n, config, init=init, rng=rng) for n in (1, 2)]
        self.decoders = [DecoderBlock(n, config, init=init, rng=rng) for n in levels]
        head_levels = levels if config.enable_mosd else (1,)
        self.heads = [
            Conv2d(config.channels(n), IMAGE_CHANNELS, 3, relu=False, init=init, rng=rng)
            for n in head_levels
        ]

    @classmethod
    def zeros(cls, config: ModelConfig) -> "MimoUNet":
        return cls(config, init="zeros")

    def forward(self, blurry: Tensor) -> list[Tensor]:
        """Return [S_1, S_2, S_3] (finest first), or [S_1] without multi-output supervision."""
        if blurry.ndim != 4 or blurry.shape[1] != IMAGE_CHANNELS:
            raise InputError(f"Expected an (N, 3, H, W) image, got shape {blurry.shape}")
        h, w = blurry.shape[2:]
        if h % 4 or w % 4:
            raise InputError(
                f"Image size {h}x{w} is not divisible by 4; reflect-pad it before inference"
            )
        cfg = self.config
        needs_pyramid = cfg.enable_mise or cfg.enable_mosd
        pyramid = build_pyramid(blurry, cfg.levels).levels if needs_pyramid else [blurry]
        image_at = (lambda k: pyramid[k - 1]) if cfg.enable_mise else (lambda k: None)

        eb1 = self.encoders[0](blurry)
        eb2 = self.encoders[1](eb1, image_at(2))
        eb3 = self.encoders[2](eb2, image_at(3))

        if cfg.enable_aff:
            skip1 = self.affs[0](eb1, eb2, eb3)
            skip2 = self.affs[1](eb1, eb2, eb3)
        else:
            skip1, skip2 = eb1, eb2

        db3 = self.decoders[2](eb3)
        db2 = self.decoders[1](skip2, db3)
        db1 = self.decoders[0](skip1, db2)

        outputs = [ops.add(self.heads[0](db1), blurry)]
        if cfg.enable_mosd:
            outputs.append(ops.add(self.heads[1](db2), pyramid[1]))
            outputs.append(ops.add(self.heads[2](db3), pyramid[2]))
        return outputs

    def num_parameters(self) -> int:
        return sum(param.size for param in self.parameters())


def count_params(config: ModelConfig) -> int:
    """Exact number of trainable scalars for ``config``."""
    return MimoUNet.zeros(config).num_parameters()


class NetworkRestorer(Restorer):
    """Runs a network without recording gradients and returns its full-resolution output."""

    def __init__(self, model: MimoUNet) -> None:
        self.model = model

    def restore(self, blurry: np.ndarray) -> np.ndarray:
        dtype = self.model.parameters()[0].dtype
        with no_grad():
            outputs = self.model(Tensor(blurry, dtype=dtype))
        return outputs[0].data
