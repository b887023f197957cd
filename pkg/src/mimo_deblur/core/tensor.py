"""Dense tensors with reverse-mode automatic differentiation.

A ``Tensor`` wraps a numpy array of at most four dimensions. Operations in
``mimo_deblur.core.ops`` record, for every result that depends on a
gradient-tracked input, the parents it was computed from and a closure that
maps the result's gradient to one gradient per parent. ``Graph`` orders
those records topologically and ``backward`` walks them in reverse.
"""

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from mimo_deblur.core.errors import ConfigurationError, UsageError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_MAX_DIMS = 4


class _Mode(threading.local):
    """Per-thread engine switches."""

    def __init__(self) -> None:
        self.dtype = np.dtype(np.float32)
        self.grad_enabled = True


_mode = _Mode()


def default_dtype() -> np.dtype:
    """Floating point type new tensors are created with on this thread."""
    return _mode.dtype


@contextmanager
def precision(dtype: np.dtype | type) -> Iterator[None]:
    """Temporarily switch the default dtype (float64 is used for gradient checks)."""
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ConfigurationError(f"Unsupported precision: {dtype}")
    previous = _mode.dtype
    _mode.dtype = dtype
    try:
        yield
    finally:
        _mode.dtype = previous


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording on this thread (inference, finite differences)."""
    previous = _mode.grad_enabled
    _mode.grad_enabled = False
    try:
        yield
    finally:
        _mode.grad_enabled = previous


def is_grad_enabled() -> bool:
    return _mode.grad_enabled


class Tensor:
    """A numpy array with optional gradient tracking."""

    def __init__(
        self,
        data: np.ndarray | float | Sequence,
        requires_grad: bool = False,
        dtype: np.dtype | type | None = None,
    ) -> None:
        array = np.asarray(data, dtype=dtype or default_dtype())
        if array.ndim > _MAX_DIMS:
            raise ConfigurationError(
                f"Tensors have at most {_MAX_DIMS} dimensions, got shape {array.shape}"
            )
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._parents: tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self.op = ""

    @classmethod
    def from_op(
        cls,
        data: np.ndarray,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
        op: str,
    ) -> "Tensor":
        """Create an operation result, recording it when any parent is tracked."""
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.op = op
        tracked = is_grad_enabled() and any(p.requires_grad for p in parents)
        out.requires_grad = tracked
        out._parents = tuple(parents) if tracked else ()
        out._backward = backward if tracked else None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __add__(self, other: "Tensor | float") -> "Tensor":
        from mimo_deblur.core import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: "Tensor | float") -> "Tensor":
        from mimo_deblur.core import ops

        return ops.sub(self, other)

    def __mul__(self, other: "Tensor | float") -> "Tensor":
        from mimo_deblur.core import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        from mimo_deblur.core import ops

        return ops.mul(self, -1.0)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"


class Parameter(Tensor):
    """A trainable leaf tensor."""

    def __init__(self, data: np.ndarray, dtype: np.dtype | type | None = None) -> None:
        super().__init__(data, requires_grad=True, dtype=dtype)


@dataclass
class ComplexSpectrum:
    """Real and imaginary parts of a 2-D DFT, each a differentiable tensor."""

    real: Tensor
    imag: Tensor

    def __post_init__(self) -> None:
        if self.real.shape != self.imag.shape:
            raise ConfigurationError(
                f"Spectrum parts differ in shape: {self.real.shape} vs {self.imag.shape}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.real.shape

    def to_complex(self) -> np.ndarray:
        return self.real.data + 1j * self.imag.data


class Graph:
    """Topologically ordered record of the operations that produced ``root``.

    Parents always precede their children in ``nodes``; every tracked node
    reachable from the root appears exactly once.
    """

    def __init__(self, root: Tensor) -> None:
        self.root = root
        self.nodes = self._toposort(root)

    @staticmethod
    def _toposort(root: Tensor) -> list[Tensor]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, seed: np.ndarray) -> None:
        """Propagate ``seed`` from the root, accumulating into leaf ``grad`` fields."""
        pending: dict[int, np.ndarray] = {id(self.root): seed}
        for node in reversed(self.nodes):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            if node._backward is None:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            for parent, parent_grad in zip(node._parents, node._backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + parent_grad
                else:
                    pending[key] = parent_grad


def backward(loss: Tensor) -> None:
    """Populate ``grad`` of every tracked leaf reachable from a scalar ``loss``.

    Gradients add onto whatever the leaves already hold, so calling this twice
    without zeroing doubles them.
    """
    if loss.size != 1:
        raise UsageError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise UsageError("backward() called on a tensor that does not track gradients")
    Graph(loss).backward(np.ones_like(loss.data))
