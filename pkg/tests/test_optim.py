"""Tests for the Adam optimizer."""

import numpy as np
import pytest

from mimo_deblur.core.errors import ConfigurationError
from mimo_deblur.core.optim import Adam, AdamState, adam_step
from mimo_deblur.core.tensor import Parameter, precision


def test_first_step_moves_by_lr() -> None:
    """Test that the bias-corrected first step has magnitude lr in every coordinate."""
    with precision(np.float64):
        param = Parameter(np.array([1.0, -2.0, 3.0]))
    state = AdamState.zeros_like([param])
    adam_step([param], [np.array([0.5, -4.0, 1e-3])], state, lr=0.1)

    np.testing.assert_allclose(param.data, [0.9, -1.9, 2.9], atol=1e-5)
    assert state.step == 1


def test_matches_reference_update() -> None:
    """Test several steps against the textbook recurrences."""
    rng = np.random.default_rng(0)
    grads = [rng.standard_normal(4) for _ in range(5)]
    with precision(np.float64):
        param = Parameter(np.zeros(4))
    optimizer = Adam([param])

    expected = np.zeros(4)
    m = np.zeros(4)
    v = np.zeros(4)
    for t, g in enumerate(grads, start=1):
        param.grad = g
        optimizer.step(lr=1e-2)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        expected -= 1e-2 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)

    np.testing.assert_allclose(param.data, expected, rtol=1e-10)
    np.testing.assert_allclose(optimizer.state.first_moments[0], m, rtol=1e-10)


def test_missing_gradient_counts_as_zero() -> None:
    """Test that a parameter with no gradient does not move on the first step."""
    param = Parameter(np.ones(2))
    optimizer = Adam([param])
    optimizer.step(lr=1e-3)
    np.testing.assert_array_equal(param.data, [1.0, 1.0])


def test_zero_grad_clears_gradients() -> None:
    param = Parameter(np.ones(2))
    param.grad = np.ones(2)
    Adam([param]).zero_grad()
    assert param.grad is None


def test_rejects_non_positive_learning_rate() -> None:
    """Test learning-rate validation."""
    param = Parameter(np.ones(2))
    with pytest.raises(ConfigurationError, match="Learning rate must be positive"):
        Adam([param]).step(lr=0.0)


def test_rejects_mismatched_state() -> None:
    """Test that the state must hold one moment per parameter."""
    param = Parameter(np.ones(2))
    with pytest.raises(ConfigurationError, match="0 moments for 1 parameters"):
        adam_step([param], [np.ones(2)], AdamState(), lr=1e-3)


def test_moments_keep_parameter_dtype() -> None:
    """Test that float32 parameters keep float32 moments."""
    param = Parameter(np.ones(3))
    optimizer = Adam([param])
    param.grad = np.full(3, 0.5, dtype=np.float32)
    optimizer.step(lr=1e-3)
    assert param.data.dtype == np.float32
    assert optimizer.state.first_moments[0].dtype == np.float32
    assert optimizer.state.second_moments[0].dtype == np.float32
