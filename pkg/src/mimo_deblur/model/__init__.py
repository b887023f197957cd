"""Network layers and the assembled multi-scale deblurring model."""

from mimo_deblur.model.blocks import (
    AsymmetricFeatureFusion,
    DecoderBlock,
    EncoderBlock,
    FeatureAttention,
    FeatureFusion,
    ShallowConvModule,
)
from mimo_deblur.model.layers import Conv2d, ConvTranspose2d, Module, ResBlock, ResStack
from mimo_deblur.model.mimo_unet import MimoUNet, NetworkRestorer, count_params

__all__ = [
    "AsymmetricFeatureFusion",
    "Conv2d",
    "ConvTranspose2d",
    "DecoderBlock",
    "EncoderBlock",
    "FeatureAttention",
    "FeatureFusion",
    "MimoUNet",
    "Module",
    "NetworkRestorer",
    "ResBlock",
    "ResStack",
    "ShallowConvModule",
    "count_params",
]
