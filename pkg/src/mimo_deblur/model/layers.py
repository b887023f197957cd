"""Parameterized building blocks: module container, convolutions, residual blocks."""

from typing import Iterator, Optional

import numpy as np

from mimo_deblur.core import ops
from mimo_deblur.core.errors import ConfigurationError
from mimo_deblur.core.tensor import Parameter, Tensor, default_dtype

INIT_SCHEMES = ("uniform", "zeros")


class Module:
    """Base class; parameters are discovered from attributes in definition order."""

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            path = f"{prefix}{name}"
            if isinstance(value, Parameter):
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{path}.")
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{index}.")

    def parameters(self) -> list[Parameter]:
        return [param for _, param in self.named_parameters()]

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def cast(self, dtype: np.dtype | type) -> "Module":
        """Convert every parameter to ``dtype`` in place."""
        for param in self.parameters():
            param.data = param.data.astype(dtype)
            param.grad = None
        return self


def _init_params(
    shape: tuple[int, ...],
    out_channels: int,
    fan_in: int,
    init: str,
    rng: Optional[np.random.Generator],
) -> tuple[np.ndarray, np.ndarray]:
    """Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), or all zeros.

    The bound is what torch.nn.Conv2d uses by default (kaiming_uniform with a=sqrt(5)).
    """
    if init not in INIT_SCHEMES:
        raise ConfigurationError(f"Unknown init scheme {init!r}; expected one of {INIT_SCHEMES}")
    if init == "zeros":
        return np.zeros(shape, dtype=default_dtype()), np.zeros(out_channels, dtype=default_dtype())
    if rng is None:
        raise ConfigurationError("Random initialization needs a numpy Generator")
    bound = 1.0 / np.sqrt(fan_in)
    weight = rng.uniform(-bound, bound, size=shape).astype(default_dtype())
    bias = rng.uniform(-bound, bound, size=out_channels).astype(default_dtype())
    return weight, bias


class Conv2d(Module):
    """Convolution with bias, "same" padding for stride 1, optional ReLU."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        relu: bool = False,
        init: str = "uniform",
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        if min(in_channels, out_channels, kernel_size, stride) < 1:
            raise ConfigurationError(
                f"Invalid Conv2d({in_channels}, {out_channels}, k={kernel_size}, s={stride})"
            )
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        weight, bias = _init_params(shape, out_channels, in_channels * kernel_size**2, init, rng)
        self.weight = Parameter(weight)
        self.bias = Parameter(bias)
        self.stride = stride
        self.padding = kernel_size // 2
        self.relu = relu

    def forward(self, x: Tensor) -> Tensor:
        out = ops.conv2d(x, self.weight, self.bias, self.stride, self.padding)
        return ops.relu(out) if self.relu else out


class ConvTranspose2d(Module):
    """Kernel 4, stride 2, padding 1 transposed convolution: doubles H and W."""

    kernel_size = 4

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        relu: bool = True,
        init: str = "uniform",
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        k = self.kernel_size
        shape = (in_channels, out_channels, k, k)
        # torch computes the fan-in of a transposed kernel from its second axis
        weight, bias = _init_params(shape, out_channels, out_channels * k * k, init, rng)
        self.weight = Parameter(weight)
        self.bias = Parameter(bias)
        self.relu = relu

    def forward(self, x: Tensor) -> Tensor:
        out = ops.transposed_conv2d(x, self.weight, self.bias, stride=2, padding=1)
        return ops.relu(out) if self.relu else out


class ResBlock(Module):
    """conv3x3 - ReLU - conv3x3 plus identity skip, no normalization, no activation after the add."""

    def __init__(
        self, channels: int, init: str = "uniform", rng: Optional[np.random.Generator] = None
    ) -> None:
        self.conv1 = Conv2d(channels, channels, 3, relu=True, init=init, rng=rng)
        self.conv2 = Conv2d(channels, channels, 3, relu=False, init=init, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        return ops.add(x, self.conv2(self.conv1(x)))


class ResStack(Module):
    """A chain of residual blocks; the body of every encoder and decoder block."""

    def __init__(
        self,
        channels: int,
        num_blocks: int,
        init: str = "uniform",
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        self.channels = channels
        self.blocks = [ResBlock(channels, init=init, rng=rng) for _ in range(num_blocks)]

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[1] != self.channels:
            raise ConfigurationError(
                f"Residual stack expects {self.channels} channels, got {x.shape[1]}"
            )
        for block in self.blocks:
            x = block(x)
        return x
