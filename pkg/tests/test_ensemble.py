"""Tests for the padding policy and geometric self-ensemble."""

import numpy as np
import pytest

from mimo_deblur.core.entities import ModelConfig
from mimo_deblur.core.errors import InputError
from mimo_deblur.core.interfaces import Restorer
from mimo_deblur.ensemble import (
    EnsembleRestorer,
    PaddedRestorer,
    geometric_transforms,
    pad_to_multiple,
    self_ensemble_infer,
)
from mimo_deblur.model import MimoUNet, NetworkRestorer


class ConstantAdd(Restorer):
    """Adds the same value to every pixel; commutes with every flip and rotation."""

    def __init__(self, value: float) -> None:
        self.value = np.float32(value)

    def restore(self, blurry: np.ndarray) -> np.ndarray:
        return blurry + self.value


def _image(h: int, w: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).random((1, 3, h, w)).astype(np.float32)


def test_eight_transforms_invert() -> None:
    """Test that every inverse undoes its transform and all eight differ."""
    image = _image(4, 4)
    transforms = list(geometric_transforms())
    assert len(transforms) == 8
    outputs = set()
    for forward, inverse in transforms:
        np.testing.assert_array_equal(inverse(forward(image)), image)
        outputs.add(forward(image).tobytes())
    assert len(outputs) == 8


def test_pad_to_multiple_reflects_bottom_right() -> None:
    image = _image(6, 5)
    padded, size = pad_to_multiple(image)
    assert padded.shape == (1, 3, 8, 8)
    assert size == (6, 5)
    np.testing.assert_array_equal(padded[:, :, :6, :5], image)
    np.testing.assert_array_equal(padded[:, :, 6, :5], image[:, :, 4])

    same, _ = pad_to_multiple(_image(8, 4))
    assert same.shape == (1, 3, 8, 4)

    with pytest.raises(InputError, match="too small"):
        pad_to_multiple(_image(1, 8))


def test_identity_model_ensemble_returns_input() -> None:
    """Test that a zero-weight network under the ensemble returns its input exactly."""
    model = MimoUNet.zeros(ModelConfig(base_channels=2, num_resblocks=1))
    image = _image(10, 7, seed=1)
    np.testing.assert_array_equal(EnsembleRestorer(NetworkRestorer(model)).restore(image), image)


def test_constant_add_is_equivariant() -> None:
    """Test ensemble(B) == B + c for a constant-add model."""
    image = _image(8, 12, seed=2)
    np.testing.assert_array_equal(self_ensemble_infer(ConstantAdd(0.25), image), image + np.float32(0.25))


def test_ensemble_matches_unrolled_average() -> None:
    """Test a random network against an explicit eight-pass average."""
    model = MimoUNet(ModelConfig(base_channels=2, num_resblocks=1), rng=np.random.default_rng(3))
    network = NetworkRestorer(model)
    image = _image(8, 12, seed=4)

    passes = []
    for flip in (False, True):
        source = image[..., ::-1] if flip else image
        for turns in range(4):
            rotated = np.ascontiguousarray(np.rot90(source, turns, axes=(2, 3)))
            restored = np.rot90(network.restore(rotated), -turns, axes=(2, 3))
            passes.append(restored[..., ::-1] if flip else restored)
    expected = np.mean(np.stack(passes).astype(np.float64), axis=0)

    np.testing.assert_allclose(self_ensemble_infer(network, image), expected, atol=1e-6)


def test_padding_is_transparent_for_aligned_inputs() -> None:
    """Test that pad-then-crop inference equals direct inference at sizes divisible by 4."""
    model = MimoUNet(ModelConfig(base_channels=2, num_resblocks=1), rng=np.random.default_rng(5))
    network = NetworkRestorer(model)
    image = _image(8, 8, seed=6)
    np.testing.assert_array_equal(PaddedRestorer(network).restore(image), network.restore(image))


def test_padded_restorer_crops_back() -> None:
    model = MimoUNet(ModelConfig(base_channels=2, num_resblocks=1), rng=np.random.default_rng(7))
    restored = PaddedRestorer(NetworkRestorer(model)).restore(_image(9, 6))
    assert restored.shape == (1, 3, 9, 6)
