"""Adam optimizer."""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mimo_deblur.core.errors import ConfigurationError
from mimo_deblur.core.tensor import Parameter


@dataclass
class AdamState:
    """First/second moment estimates, one array per parameter, plus the step count."""

    step: int = 0
    first_moments: list[np.ndarray] = field(default_factory=list)
    second_moments: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, params: Sequence[Parameter]) -> "AdamState":
        return cls(
            step=0,
            first_moments=[np.zeros_like(p.data) for p in params],
            second_moments=[np.zeros_like(p.data) for p in params],
        )


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[np.ndarray | None],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    """Apply one bias-corrected Adam update in place and return ``state``.

    A missing gradient is treated as zero.
    """
    if lr <= 0:
        raise ConfigurationError(f"Learning rate must be positive, got {lr}")
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ConfigurationError(f"Adam betas must lie in [0, 1), got ({beta1}, {beta2})")
    if len(state.first_moments) != len(params):
        raise ConfigurationError(
            f"Optimizer state holds {len(state.first_moments)} moments for {len(params)} parameters"
        )

    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for param, grad, m, v in zip(params, grads, state.first_moments, state.second_moments):
        if grad is None:
            grad = np.zeros_like(param.data)
        dtype = param.data.dtype
        m *= dtype.type(beta1)
        m += dtype.type(1.0 - beta1) * grad
        v *= dtype.type(beta2)
        v += dtype.type(1.0 - beta2) * grad * grad
        m_hat = m / dtype.type(correction1)
        v_hat = v / dtype.type(correction2)
        param.data -= dtype.type(lr) * m_hat / (np.sqrt(v_hat) + dtype.type(eps))
    return state


class Adam:
    """Stateful wrapper around :func:`adam_step` for a fixed parameter list."""

    def __init__(
        self,
        params: Sequence[Parameter],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = list(params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState.zeros_like(self.params)

    def step(self, lr: float) -> None:
        adam_step(
            self.params,
            [p.grad for p in self.params],
            self.state,
            lr,
            self.beta1,
            self.beta2,
            self.eps,
        )

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()
