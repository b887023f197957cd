"""Differentiable operations on :class:`~mimo_deblur.core.tensor.Tensor`.

Only what the network and its losses need: elementwise arithmetic, ReLU,
channel concatenation, reductions, convolution, stride-2 transposed
convolution, bilinear resizing and the 2-D DFT. Binary operations require
equal shapes; the only broadcasting is against a Python scalar.
"""

from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from mimo_deblur.core import fft
from mimo_deblur.core.errors import ConfigurationError
from mimo_deblur.core.tensor import ComplexSpectrum, Tensor

Scalar = float | int


def _require_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ConfigurationError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _require_4d(x: Tensor, op: str) -> None:
    if x.ndim != 4:
        raise ConfigurationError(f"{op}: expected an (N, C, H, W) tensor, got shape {x.shape}")


# ---------------------------------------------------------------------------
# Elementwise
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor | Scalar) -> Tensor:
    if not isinstance(b, Tensor):
        return Tensor.from_op(a.data + a.data.dtype.type(b), (a,), lambda g: (g,), "add")
    _require_same_shape(a, b, "add")
    return Tensor.from_op(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a: Tensor, b: Tensor | Scalar) -> Tensor:
    if not isinstance(b, Tensor):
        return Tensor.from_op(a.data - a.data.dtype.type(b), (a,), lambda g: (g,), "sub")
    _require_same_shape(a, b, "sub")
    return Tensor.from_op(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a: Tensor, b: Tensor | Scalar) -> Tensor:
    if not isinstance(b, Tensor):
        factor = a.data.dtype.type(b)
        return Tensor.from_op(a.data * factor, (a,), lambda g: (g * factor,), "mul")
    _require_same_shape(a, b, "mul")
    return Tensor.from_op(
        a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data), "mul"
    )


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return Tensor.from_op(
        np.where(mask, a.data, a.data.dtype.type(0)), (a,), lambda g: (g * mask,), "relu"
    )


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    _require_4d(a, "concat_channels")
    _require_4d(b, "concat_channels")
    if (a.shape[0], a.shape[2], a.shape[3]) != (b.shape[0], b.shape[2], b.shape[3]):
        raise ConfigurationError(
            f"concat_channels: N, H, W must match, got {a.shape} and {b.shape}"
        )
    split = a.shape[1]
    return Tensor.from_op(
        np.concatenate([a.data, b.data], axis=1),
        (a, b),
        lambda g: (g[:, :split], g[:, split:]),
        "concat",
    )


def total(a: Tensor) -> Tensor:
    """Sum of all entries as a scalar tensor."""
    return Tensor.from_op(
        np.asarray(a.data.sum(), dtype=a.dtype),
        (a,),
        lambda g: (np.full(a.shape, g, dtype=a.dtype),),
        "sum",
    )


def l1_mean(a: Tensor, b: Tensor) -> Tensor:
    """sum |a - b| divided by the element count of ``a``.

    The subgradient at a == b is taken as zero.
    """
    _require_same_shape(a, b, "l1_mean")
    diff = a.data - b.data
    count = a.size
    value = np.asarray(np.abs(diff).sum() / count, dtype=a.dtype)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        local = np.sign(diff) * (g / count)
        return local, -local

    return Tensor.from_op(value, (a, b), backward, "l1_mean")


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------

def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, padding: int):
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    n, c, out_h, out_w = windows.shape[:4]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * kh * kw)
    return cols, out_h, out_w


def _col2im(
    cols: np.ndarray,
    shape: tuple[int, int, int, int],
    kh: int,
    kw: int,
    stride: int,
    padding: int,
    out_h: int,
    out_w: int,
) -> np.ndarray:
    n, c, h, w = shape
    blocks = cols.reshape(n, out_h, out_w, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    padded = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            padded[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += blocks[:, :, i, j]
    return padded[:, :, padding:padding + h, padding:padding + w]


def _to_rows(x: np.ndarray) -> np.ndarray:
    """(N, C, H, W) -> (N*H*W, C)."""
    return x.transpose(0, 2, 3, 1).reshape(-1, x.shape[1])


def _from_rows(rows: np.ndarray, n: int, h: int, w: int) -> np.ndarray:
    return np.ascontiguousarray(rows.reshape(n, h, w, -1).transpose(0, 3, 1, 2))


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """Cross-correlation of ``x`` (N, C_in, H, W) with ``weight`` (C_out, C_in, kH, kW)."""
    _require_4d(x, "conv2d")
    if weight.ndim != 4:
        raise ConfigurationError(f"conv2d: weight must be 4-D, got shape {weight.shape}")
    if stride < 1:
        raise ConfigurationError(f"conv2d: stride must be positive, got {stride}")
    if padding < 0:
        raise ConfigurationError(f"conv2d: padding must be non-negative, got {padding}")
    n, c_in, h, w = x.shape
    c_out, w_in, kh, kw = weight.shape
    if c_in != w_in:
        raise ConfigurationError(f"conv2d: input has {c_in} channels, weight expects {w_in}")
    if bias is not None and bias.shape != (c_out,):
        raise ConfigurationError(f"conv2d: bias must have shape ({c_out},), got {bias.shape}")
    if conv_output_size(h, kh, stride, padding) < 1 or conv_output_size(w, kw, stride, padding) < 1:
        raise ConfigurationError(f"conv2d: kernel {kh}x{kw} does not fit input {h}x{w}")

    cols, out_h, out_w = _im2col(x.data, kh, kw, stride, padding)
    kernel = weight.data.reshape(c_out, -1)
    rows = cols @ kernel.T
    if bias is not None:
        rows += bias.data
    out = _from_rows(rows, n, out_h, out_w)

    def backward(g: np.ndarray):
        g_rows = _to_rows(g)
        grad_x = None
        if x.requires_grad:
            grad_x = _col2im(g_rows @ kernel, x.shape, kh, kw, stride, padding, out_h, out_w)
        grad_w = (g_rows.T @ cols).reshape(weight.shape) if weight.requires_grad else None
        grad_b = g_rows.sum(axis=0) if bias is not None and bias.requires_grad else None
        return grad_x, grad_w, grad_b

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward, "conv2d")


def transposed_conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 2,
    padding: int = 1,
) -> Tensor:
    """Adjoint of :func:`conv2d`; ``weight`` is (C_in, C_out, kH, kW).

    Only configurations that exactly double the spatial size are accepted.
    """
    _require_4d(x, "transposed_conv2d")
    if weight.ndim != 4:
        raise ConfigurationError(f"transposed_conv2d: weight must be 4-D, got {weight.shape}")
    if stride < 1:
        raise ConfigurationError(f"transposed_conv2d: stride must be positive, got {stride}")
    n, c_in, h, w = x.shape
    w_in, c_out, kh, kw = weight.shape
    if c_in != w_in:
        raise ConfigurationError(
            f"transposed_conv2d: input has {c_in} channels, weight expects {w_in}"
        )
    out_h = (h - 1) * stride - 2 * padding + kh
    out_w = (w - 1) * stride - 2 * padding + kw
    if (out_h, out_w) != (2 * h, 2 * w):
        raise ConfigurationError(
            f"transposed_conv2d: stride {stride}, kernel {kh}x{kw}, padding {padding} "
            f"maps {h}x{w} to {out_h}x{out_w}, not {2 * h}x{2 * w}"
        )
    if bias is not None and bias.shape != (c_out,):
        raise ConfigurationError(
            f"transposed_conv2d: bias must have shape ({c_out},), got {bias.shape}"
        )

    kernel = weight.data.reshape(c_in, -1)
    x_rows = _to_rows(x.data)
    out = _col2im(x_rows @ kernel, (n, c_out, out_h, out_w), kh, kw, stride, padding, h, w)
    if bias is not None:
        out += bias.data[None, :, None, None]

    def backward(g: np.ndarray):
        cols, _, _ = _im2col(g, kh, kw, stride, padding)
        grad_x = _from_rows(cols @ kernel.T, n, h, w) if x.requires_grad else None
        grad_w = (x_rows.T @ cols).reshape(weight.shape) if weight.requires_grad else None
        grad_b = g.sum(axis=(0, 2, 3)) if bias is not None and bias.requires_grad else None
        return grad_x, grad_w, grad_b

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward, "transposed_conv2d")


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

@lru_cache(maxsize=128)
def bilinear_matrix(size_in: int, size_out: int, dtype_name: str = "float32") -> np.ndarray:
    """(size_out, size_in) half-pixel aligned linear interpolation weights.

    Sample positions are clamped to the border, so halving averages pixel
    pairs and doubling mixes neighbours 3:1.
    """
    matrix = np.zeros((size_out, size_in), dtype=np.float64)
    scale = size_in / size_out
    for i in range(size_out):
        src = max((i + 0.5) * scale - 0.5, 0.0)
        lo = min(int(np.floor(src)), size_in - 1)
        hi = min(lo + 1, size_in - 1)
        frac = src - lo
        matrix[i, lo] += 1.0 - frac
        matrix[i, hi] += frac
    matrix = matrix.astype(dtype_name)
    matrix.flags.writeable = False
    return matrix


def resize_bilinear(x: Tensor, height: int, width: int) -> Tensor:
    """Resize the spatial axes of ``x`` to ``height`` x ``width``."""
    _require_4d(x, "resize_bilinear")
    if height < 1 or width < 1:
        raise ConfigurationError(f"resize_bilinear: invalid target size {height}x{width}")
    h, w = x.shape[2:]
    if (h, w) == (height, width):
        return x
    rows = bilinear_matrix(h, height, x.dtype.name)
    cols = bilinear_matrix(w, width, x.dtype.name)
    out = rows @ x.data @ cols.T
    return Tensor.from_op(out, (x,), lambda g: (rows.T @ g @ cols,), "resize")


# ---------------------------------------------------------------------------
# Frequency domain
# ---------------------------------------------------------------------------

def fft2(x: Tensor) -> ComplexSpectrum:
    """Unnormalized per-channel 2-D DFT of a real (N, C, H, W) tensor.

    The DFT matrix is symmetric, so the adjoint of taking the real part is
    Re(F g) and of taking the imaginary part is Im(F g).
    """
    _require_4d(x, "fft2")
    spectrum = fft.fft2(x.data)
    dtype = x.dtype

    def real_backward(g: np.ndarray):
        return (fft.fft2(g).real.astype(dtype),)

    def imag_backward(g: np.ndarray):
        return (fft.fft2(g).imag.astype(dtype),)

    return ComplexSpectrum(
        real=Tensor.from_op(spectrum.real.astype(dtype), (x,), real_backward, "fft2.real"),
        imag=Tensor.from_op(spectrum.imag.astype(dtype), (x,), imag_backward, "fft2.imag"),
    )
