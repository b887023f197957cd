"""Tests for finite-difference gradient verification."""

import numpy as np
import pytest

from mimo_deblur.core import ConfigurationError, ModelConfig
from mimo_deblur.config import VARIANT_PRESETS
from mimo_deblur.gradcheck import (
    ERROR_FLOOR,
    GradCheckReport,
    check_model_gradients,
    finite_difference,
    relative_error,
)
from mimo_deblur.model import count_params

TINY = ModelConfig(base_channels=2, num_resblocks=1)


def test_relative_error_floor() -> None:
    """Test that tiny gradients are compared against the floor, not each other."""
    assert relative_error(1.0, 1.0) == 0.0
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)
    assert relative_error(1e-9, 0.0) == pytest.approx(1e-9 / ERROR_FLOOR)


def test_finite_difference_restores_entry() -> None:
    array = np.array([1.0, 2.0, 3.0])

    def f() -> float:
        return float(np.sum(array**2))

    assert finite_difference(f, array, (1,), eps=1e-4) == pytest.approx(4.0, rel=1e-8)
    np.testing.assert_array_equal(array, [1.0, 2.0, 3.0])


def test_every_entry_of_small_network_passes() -> None:
    """Test every parameter entry of a small network on a 1x3x16x16 input at 1e-4."""
    report = check_model_gradients(TINY, size=16, samples=0, seed=0)
    assert report.passed(1e-4), (report.worst_tensor, report.max_error)
    assert np.isfinite(report.loss)
    assert report.entries_checked == count_params(TINY)
    assert set(report.per_tensor) >= {"encoders.0.stem.weight"}
    # the ReLU inputs feeding these biases are never exactly zero
    assert report.per_tensor["affs.0.mix.bias"] <= 1e-4
    assert report.per_tensor["affs.0.squeeze.bias"] <= 1e-4


@pytest.mark.parametrize("fusion", ["concat", "sum"])
def test_fusion_variants_pass(fusion: str) -> None:
    config = ModelConfig(base_channels=2, num_resblocks=1, fusion=fusion)
    report = check_model_gradients(config, size=8, samples=1, seed=1)
    assert report.passed(1e-4), (report.worst_tensor, report.max_error)


def test_ablated_network_passes() -> None:
    """Test a network without multi-scale inputs, outputs or cross-scale fusion."""
    config = ModelConfig(
        base_channels=2, num_resblocks=1, enable_mise=False, enable_mosd=False, enable_aff=False
    )
    report = check_model_gradients(config, size=8, samples=2, seed=2, lam=0.0)
    assert report.passed(1e-4), (report.worst_tensor, report.max_error)


def test_progress_called_per_tensor() -> None:
    seen = []
    report = check_model_gradients(TINY, size=8, samples=1, progress=lambda n, e: seen.append(n))
    assert seen == list(report.per_tensor)


def test_report_aggregates() -> None:
    report = GradCheckReport(per_tensor={"a": 1e-6, "b": 3e-4})
    assert report.max_error == 3e-4
    assert report.worst_tensor == "b"
    assert not report.passed(1e-4)
    assert GradCheckReport().worst_tensor is None


def test_invalid_arguments() -> None:
    with pytest.raises(ConfigurationError, match="multiple of 4"):
        check_model_gradients(TINY, size=10)
    with pytest.raises(ConfigurationError, match="samples must be >= 0"):
        check_model_gradients(TINY, samples=-1)


@pytest.mark.slow
def test_tiny_preset_every_entry_passes() -> None:
    """Test every gradient entry of the desk-scale preset under the total loss."""
    base, blocks = VARIANT_PRESETS["tiny"]
    config = ModelConfig(base_channels=base, num_resblocks=blocks)
    report = check_model_gradients(config, size=16, samples=0, seed=0, lam=0.1)
    assert report.passed(1e-4), (report.worst_tensor, report.max_error)
    assert report.entries_checked == count_params(config)
