"""Tests for the content, frequency and total losses."""

import numpy as np
import pytest

from mimo_deblur.core.entities import LossReport
from mimo_deblur.core.errors import ConfigurationError, UsageError
from mimo_deblur.core.tensor import Tensor, precision
from mimo_deblur.losses import DEFAULT_LAMBDA, content_loss, msfr_loss, total_loss
from oracles import naive_dft2


def _pyramid(rng: np.random.Generator, n: int = 1, size: int = 8) -> list[Tensor]:
    return [Tensor(rng.random((n, 3, size // 2**k, size // 2**k))) for k in range(3)]


def test_identical_pyramids_give_zero() -> None:
    """Test both loss terms vanish on identical pyramids."""
    levels = _pyramid(np.random.default_rng(0))
    assert content_loss(levels, levels).item() == 0.0
    assert msfr_loss(levels, levels).item() == 0.0


def test_content_loss_single_pixel_example() -> None:
    """Test 0.3 in one pixel of a 1x3x2x2 level gives 0.3 / 12."""
    zeros = [Tensor(np.zeros((1, 3, 8, 8))), Tensor(np.zeros((1, 3, 2, 2))), Tensor(np.zeros((1, 3, 1, 1)))]
    changed = zeros[1].data.copy()
    changed[0, 1, 0, 1] = 0.3
    predictions = [zeros[0], Tensor(changed), zeros[2]]
    assert content_loss(predictions, zeros).item() == pytest.approx(0.025, rel=1e-6)


def test_content_loss_matches_scalar_loop() -> None:
    """Test against an explicit per-element loop."""
    rng = np.random.default_rng(1)
    with precision(np.float64):
        predictions = _pyramid(rng, n=2)
        targets = _pyramid(rng, n=2)
    expected = 0.0
    for pred, target in zip(predictions, targets):
        level = 0.0
        for index in np.ndindex(pred.shape):
            level += abs(pred.data[index] - target.data[index])
        expected += level / pred.size
    assert content_loss(predictions, targets).item() == pytest.approx(expected, rel=1e-9)


def test_msfr_impulse_example() -> None:
    """Test an amplitude-a impulse at the origin: a * h * w / t_1."""
    h, w, a = 6, 10, 0.4
    target = np.zeros((1, 3, h, w))
    prediction = target.copy()
    prediction[0, 2, 0, 0] = a
    with precision(np.float64):
        value = msfr_loss([Tensor(prediction)], [Tensor(target)]).item()
    assert value == pytest.approx(a * h * w / (3 * h * w))


def test_msfr_matches_naive_dft_oracle() -> None:
    """Test against a naive DFT and split real/imaginary L1 sums."""
    rng = np.random.default_rng(2)
    with precision(np.float64):
        prediction = Tensor(rng.random((1, 3, 6, 8)))
        target = Tensor(rng.random((1, 3, 6, 8)))
        value = msfr_loss([prediction], [target]).item()
    diff = naive_dft2(prediction.data) - naive_dft2(target.data)
    expected = (np.abs(diff.real).sum() + np.abs(diff.imag).sum()) / prediction.size
    assert value == pytest.approx(expected, rel=1e-9)


def test_losses_decompose_over_levels() -> None:
    """Test that the multi-level loss is the sum of single-level losses."""
    rng = np.random.default_rng(3)
    with precision(np.float64):
        predictions = _pyramid(rng)
        targets = _pyramid(rng)
        for loss in (content_loss, msfr_loss):
            whole = loss(predictions, targets).item()
            parts = sum(loss([p], [t]).item() for p, t in zip(predictions, targets))
            assert whole == pytest.approx(parts, rel=1e-12)


def test_level_count_mismatch_rejected() -> None:
    """Test that pyramids of different length are a usage error."""
    levels = _pyramid(np.random.default_rng(4))
    with pytest.raises(UsageError, match="3 predicted levels for 1 target"):
        content_loss(levels, levels[:1])
    with pytest.raises(UsageError, match="Level 1"):
        msfr_loss([levels[0]], [levels[1]])


def test_total_loss_combination() -> None:
    """Test l_total == l_cont + lambda * l_msfr and the default weight."""
    assert DEFAULT_LAMBDA == 0.1
    assert LossReport.combine(0.5, 0.2, 0.1).l_total == pytest.approx(0.52)

    rng = np.random.default_rng(5)
    predictions = _pyramid(rng)
    targets = _pyramid(rng)
    report = total_loss(predictions, targets)
    assert report.lam == 0.1
    assert report.l_total == report.l_cont + 0.1 * report.l_msfr
    assert report.l_cont > 0 and report.l_msfr > 0
    assert report.objective.item() == pytest.approx(report.l_total, rel=1e-5)


def test_total_loss_without_frequency_term() -> None:
    """Test lambda = 0: total equals content loss exactly, frequency term still reported."""
    rng = np.random.default_rng(6)
    predictions = _pyramid(rng)
    targets = _pyramid(rng)
    report = total_loss(predictions, targets, lam=0.0)
    assert report.l_total == report.l_cont
    assert report.l_msfr > 0


def test_negative_lambda_rejected() -> None:
    levels = _pyramid(np.random.default_rng(7))
    with pytest.raises(ConfigurationError, match="non-negative"):
        total_loss(levels, levels, lam=-0.1)


def test_report_finiteness() -> None:
    assert LossReport.combine(0.1, 0.2, 0.1).is_finite
    assert not LossReport.combine(float("nan"), 0.2, 0.1).is_finite
