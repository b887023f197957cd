"""Tests for core entities."""

import math

import pytest

from mimo_deblur.core import (
    ConfigurationError,
    EvalReport,
    EvalRow,
    FusionMode,
    ModelConfig,
    TrainConfig,
    TrainLogRecord,
)


def test_model_config_defaults() -> None:
    """Test the default widths and toggles."""
    config = ModelConfig()
    assert config.base_channels == 32
    assert config.num_resblocks == 8
    assert [config.channels(k) for k in (1, 2, 3)] == [32, 64, 128]
    assert config.enable_mise and config.enable_mosd and config.enable_aff
    assert config.fusion is FusionMode.FAM


def test_model_config_validation() -> None:
    """Test model config validation."""
    with pytest.raises(ConfigurationError, match="Only 3 levels"):
        ModelConfig(levels=4)
    with pytest.raises(ConfigurationError, match="base_channels must be >= 1"):
        ModelConfig(base_channels=0)
    with pytest.raises(ConfigurationError, match="num_resblocks must be >= 1"):
        ModelConfig(num_resblocks=0)
    with pytest.raises(ConfigurationError, match="Unknown fusion mode"):
        ModelConfig(fusion="max")


def test_model_config_dict_round_trip() -> None:
    config = ModelConfig(base_channels=8, num_resblocks=2, enable_aff=False, fusion="sum")
    data = config.to_dict()
    assert data["fusion"] == "sum"
    assert ModelConfig.from_dict(data) == config

    with pytest.raises(ConfigurationError, match="Unknown model config keys"):
        ModelConfig.from_dict({**data, "depth": 3})


def test_train_config_defaults() -> None:
    """Test the published optimization protocol."""
    config = TrainConfig()
    assert config.epochs == 3000
    assert config.batch_size == 4
    assert config.lr0 == 1e-4
    assert config.lr_decay_every == 500
    assert config.lr_decay_factor == 0.5
    assert config.lam == 0.1
    assert config.patch_size == 256
    assert config.flip_prob == 0.5


@pytest.mark.parametrize(
    ("kwargs", "message"),
    [
        ({"lr0": 0.0}, "lr0 must be positive"),
        ({"lr_decay_factor": 1.5}, "lr_decay_factor"),
        ({"lr_decay_factor": 0.0}, "lr_decay_factor"),
        ({"batch_size": 0}, "batch_size"),
        ({"lam": -1.0}, "lambda"),
        ({"patch_size": 30}, "multiple of 4"),
        ({"flip_prob": 2.0}, "flip_prob"),
        ({"max_steps": 0}, "max_steps"),
    ],
)
def test_train_config_validation(kwargs: dict, message: str) -> None:
    """Test train config validation."""
    with pytest.raises(ConfigurationError, match=message):
        TrainConfig(**kwargs)


def test_log_record_equality_ignores_wall_time() -> None:
    a = TrainLogRecord(1, 0, 1e-4, 0.5, 2.0, 0.7, wall_time=1.0)
    b = TrainLogRecord(1, 0, 1e-4, 0.5, 2.0, 0.7, wall_time=9.0)
    assert a == b


def test_eval_report_aggregates() -> None:
    """Test means over successful rows and the infinite-PSNR count."""
    report = EvalReport(
        rows=[
            EvalRow("a", psnr=30.0, ssim=0.9, inference_ms=10.0),
            EvalRow("b", psnr=32.0, ssim=0.8, inference_ms=20.0),
            EvalRow("c", error="InputError: missing"),
        ],
        variant="mimo-unet",
    )
    assert report.mean_psnr == pytest.approx(31.0)
    assert report.mean_ssim == pytest.approx(0.85)
    assert report.mean_ms == pytest.approx(15.0)
    assert [row.record_id for row in report.failed] == ["c"]
    assert report.infinite_psnr_count == 0

    exact = EvalReport(rows=[EvalRow("d", psnr=math.inf, ssim=1.0, inference_ms=1.0)], variant="x")
    assert exact.infinite_psnr_count == 1
    assert math.isinf(exact.mean_psnr)
    assert math.isnan(EvalReport(rows=[], variant="x").mean_psnr)
