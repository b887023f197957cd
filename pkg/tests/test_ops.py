"""Tests for differentiable operations."""

import numpy as np
import pytest

from mimo_deblur.core import ops
from mimo_deblur.core.errors import ConfigurationError
from mimo_deblur.core.tensor import Parameter, Tensor, backward, no_grad, precision
from oracles import direct_conv2d, naive_dft2, numeric_gradient


def test_l1_mean_example() -> None:
    """Test sum |a - b| / count on a small example."""
    a = Tensor(np.array([[0.1, 0.2], [0.3, 0.4]]))
    b = Tensor(np.array([[0.0, 0.2], [0.5, 0.4]]))
    assert ops.l1_mean(a, b).item() == pytest.approx(0.075, rel=1e-5)


def test_l1_mean_subgradient_is_zero_at_equality() -> None:
    """Test that equal entries contribute no gradient."""
    a = Parameter(np.array([1.0, 2.0, 3.0]))
    b = Tensor(np.array([1.0, 1.0, 4.0]))
    backward(ops.l1_mean(a, b))
    np.testing.assert_allclose(a.grad, [0.0, 1 / 3, -1 / 3], rtol=1e-6)


def test_shape_mismatch_rejected() -> None:
    """Test that binary operations do not broadcast tensors."""
    with pytest.raises(ConfigurationError, match="shape mismatch"):
        ops.add(Tensor(np.ones(3)), Tensor(np.ones(4)))


def test_concat_channels_and_gradient_split() -> None:
    """Test channel concatenation and that the gradient is split back."""
    a = Parameter(np.ones((1, 2, 3, 3)))
    b = Parameter(np.full((1, 1, 3, 3), 2.0))
    out = ops.concat_channels(a, b)
    assert out.shape == (1, 3, 3, 3)

    weights = Tensor(np.arange(27, dtype=np.float32).reshape(1, 3, 3, 3))
    backward(ops.total(ops.mul(out, weights)))
    np.testing.assert_array_equal(a.grad, weights.data[:, :2])
    np.testing.assert_array_equal(b.grad, weights.data[:, 2:])


def test_concat_channels_requires_matching_size() -> None:
    """Test that spatial sizes must agree."""
    with pytest.raises(ConfigurationError, match="N, H, W must match"):
        ops.concat_channels(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.ones((1, 1, 3, 3))))


def test_relu_masks_negative_entries() -> None:
    """Test ReLU values and gradients."""
    x = Parameter(np.array([-1.0, 0.0, 2.0]))
    y = ops.relu(x)
    np.testing.assert_array_equal(y.data, [0.0, 0.0, 2.0])
    backward(ops.total(y))
    np.testing.assert_array_equal(x.grad, [0.0, 0.0, 1.0])


def test_conv2d_identity_kernel() -> None:
    """Test that a centred delta kernel with padding 1 reproduces its input."""
    rng = np.random.default_rng(0)
    x = Tensor(rng.random((2, 3, 5, 6)))
    weight = np.zeros((3, 3, 3, 3), dtype=np.float32)
    for c in range(3):
        weight[c, c, 1, 1] = 1.0
    out = ops.conv2d(x, Tensor(weight), Tensor(np.zeros(3)), stride=1, padding=1)
    np.testing.assert_allclose(out.data, x.data, rtol=1e-6)


@pytest.mark.parametrize(
    ("size", "kernel", "stride", "padding"),
    [(8, 3, 1, 1), (8, 3, 2, 1), (7, 3, 2, 1), (6, 1, 1, 0), (9, 5, 2, 2)],
)
def test_conv2d_matches_direct_loops(size: int, kernel: int, stride: int, padding: int) -> None:
    """Test conv2d against explicit loops and the output-size formula."""
    rng = np.random.default_rng(size + kernel)
    with precision(np.float64):
        x = Tensor(rng.standard_normal((2, 3, size, size + 1)))
        weight = Tensor(rng.standard_normal((4, 3, kernel, kernel)))
        bias = Tensor(rng.standard_normal(4))
        out = ops.conv2d(x, weight, bias, stride=stride, padding=padding)

    expected = direct_conv2d(x.data, weight.data, bias.data, stride, padding)
    assert out.shape == expected.shape
    assert out.shape[2] == (size + 2 * padding - kernel) // stride + 1
    np.testing.assert_allclose(out.data, expected, atol=1e-10)


def test_conv2d_rejects_bad_configuration() -> None:
    """Test channel mismatch and non-positive stride."""
    x = Tensor(np.ones((1, 2, 4, 4)))
    with pytest.raises(ConfigurationError, match="input has 2 channels"):
        ops.conv2d(x, Tensor(np.ones((1, 3, 3, 3))), padding=1)
    with pytest.raises(ConfigurationError, match="stride must be positive"):
        ops.conv2d(x, Tensor(np.ones((1, 2, 3, 3))), stride=0)


def test_transposed_conv_doubles_size() -> None:
    """Test the kernel-4, stride-2, padding-1 output shape."""
    x = Tensor(np.ones((1, 4, 5, 3)))
    out = ops.transposed_conv2d(x, Tensor(np.ones((4, 2, 4, 4))), Tensor(np.zeros(2)))
    assert out.shape == (1, 2, 10, 6)


def test_transposed_conv_rejects_non_doubling_setup() -> None:
    """Test that only configurations doubling H and W are accepted."""
    x = Tensor(np.ones((1, 1, 4, 4)))
    with pytest.raises(ConfigurationError, match="not 8x8"):
        ops.transposed_conv2d(x, Tensor(np.ones((1, 1, 3, 3))), stride=2, padding=1)


def test_transposed_conv_is_adjoint_of_strided_conv() -> None:
    """Test <conv(x), y> == <x, conv_transpose(y)> for shared weights."""
    rng = np.random.default_rng(3)
    with precision(np.float64):
        x = Tensor(rng.standard_normal((2, 3, 8, 6)))
        y = Tensor(rng.standard_normal((2, 5, 4, 3)))
        weight = Tensor(rng.standard_normal((5, 3, 4, 4)))
        forward = ops.conv2d(x, weight, stride=2, padding=1)
        adjoint = ops.transposed_conv2d(y, weight, stride=2, padding=1)

    assert forward.shape == y.shape
    assert adjoint.shape == x.shape
    assert np.sum(forward.data * y.data) == pytest.approx(np.sum(x.data * adjoint.data), rel=1e-10)


def test_bilinear_halving_averages_pairs() -> None:
    """Test that halving a ramp averages each pixel pair."""
    x = Tensor(np.arange(16, dtype=np.float32).reshape(1, 1, 4, 4))
    out = ops.resize_bilinear(x, 2, 2)
    np.testing.assert_allclose(out.data[0, 0], [[2.5, 4.5], [10.5, 12.5]])


def test_bilinear_preserves_constants() -> None:
    """Test that rows of the interpolation matrix sum to one."""
    x = Tensor(np.full((1, 3, 8, 12), 0.3))
    for size in [(4, 6), (16, 24), (2, 3)]:
        np.testing.assert_allclose(ops.resize_bilinear(x, *size).data, 0.3, rtol=1e-6)


def test_resize_to_same_size_is_identity() -> None:
    x = Tensor(np.ones((1, 1, 4, 4)))
    assert ops.resize_bilinear(x, 4, 4) is x


def test_fft2_op_matches_naive_dft() -> None:
    """Test the differentiable DFT values."""
    rng = np.random.default_rng(4)
    with precision(np.float64):
        x = Tensor(rng.standard_normal((1, 2, 6, 5)))
        spectrum = ops.fft2(x)
    np.testing.assert_allclose(spectrum.to_complex(), naive_dft2(x.data), atol=1e-10)


def _check_gradient(build, inputs: list[Parameter]) -> None:
    """Compare backprop with central differences of sum(build() * projection)."""
    rng = np.random.default_rng(5)
    with precision(np.float64):
        projection = Tensor(rng.standard_normal(build().shape))

        def value() -> float:
            with no_grad():
                return float(np.sum(build().data * projection.data))

        for param in inputs:
            param.zero_grad()
        backward(ops.total(ops.mul(build(), projection)))
        for param in inputs:
            numeric = numeric_gradient(value, param.data)
            np.testing.assert_allclose(param.grad, numeric, rtol=1e-5, atol=1e-7)


def test_conv2d_gradients() -> None:
    """Test conv2d input, weight and bias gradients numerically."""
    rng = np.random.default_rng(6)
    with precision(np.float64):
        x = Parameter(rng.standard_normal((1, 2, 5, 5)))
        weight = Parameter(rng.standard_normal((3, 2, 3, 3)))
        bias = Parameter(rng.standard_normal(3))
    _check_gradient(lambda: ops.conv2d(x, weight, bias, stride=2, padding=1), [x, weight, bias])


def test_transposed_conv2d_gradients() -> None:
    """Test transposed convolution gradients numerically."""
    rng = np.random.default_rng(7)
    with precision(np.float64):
        x = Parameter(rng.standard_normal((1, 2, 3, 2)))
        weight = Parameter(rng.standard_normal((2, 3, 4, 4)))
        bias = Parameter(rng.standard_normal(3))
    _check_gradient(lambda: ops.transposed_conv2d(x, weight, bias), [x, weight, bias])


def test_resize_gradients() -> None:
    """Test bilinear resize gradients in both directions."""
    rng = np.random.default_rng(8)
    with precision(np.float64):
        x = Parameter(rng.standard_normal((1, 2, 4, 6)))
    _check_gradient(lambda: ops.resize_bilinear(x, 2, 3), [x])
    _check_gradient(lambda: ops.resize_bilinear(x, 8, 12), [x])


def test_fft2_gradients() -> None:
    """Test gradients through the real and imaginary parts of the DFT."""
    rng = np.random.default_rng(9)
    with precision(np.float64):
        x = Parameter(rng.standard_normal((1, 1, 4, 5)))
    _check_gradient(lambda: ops.fft2(x).real, [x])
    _check_gradient(lambda: ops.fft2(x).imag, [x])
