"""Finite-difference verification of the network's analytic gradients."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from mimo_deblur.core.entities import ModelConfig
from mimo_deblur.core.errors import ConfigurationError
from mimo_deblur.core.tensor import Tensor, backward, no_grad, precision
from mimo_deblur.datapipe.pyramid import build_pyramid
from mimo_deblur.losses import DEFAULT_LAMBDA, total_loss
from mimo_deblur.model.mimo_unet import MimoUNet

DEFAULT_EPS = 1e-6
ERROR_FLOOR = 1e-5


def relative_error(analytic: float, numeric: float, floor: float = ERROR_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def finite_difference(
    f: Callable[[], float],
    array: np.ndarray,
    index: tuple[int, ...],
    eps: float = DEFAULT_EPS,
) -> float:
    """Central difference quotient of ``f`` at ``array[index]``.

    ``array`` is perturbed in place and restored before returning.
    """
    original = array[index]
    try:
        array[index] = original + eps
        f_plus = f()
        array[index] = original - eps
        f_minus = f()
    finally:
        array[index] = original
    return (f_plus - f_minus) / (2 * eps)


@dataclass
class GradCheckReport:
    """Worst relative error per parameter tensor."""

    per_tensor: dict[str, float] = field(default_factory=dict)
    entries_checked: int = 0
    loss: float = float("nan")

    @property
    def max_error(self) -> float:
        return max(self.per_tensor.values(), default=0.0)

    @property
    def worst_tensor(self) -> Optional[str]:
        if not self.per_tensor:
            return None
        return max(self.per_tensor, key=self.per_tensor.get)

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_error <= tolerance


def check_model_gradients(
    config: ModelConfig,
    size: int = 16,
    samples: int = 4,
    seed: int = 0,
    lam: float = DEFAULT_LAMBDA,
    eps: float = DEFAULT_EPS,
    progress: Optional[Callable[[str, float], None]] = None,
) -> GradCheckReport:
    """Compare backprop gradients of the total loss with finite differences in float64.

    ``samples`` entries are drawn per parameter tensor; 0 checks every entry.
    The network gets the default random init, so biases are nonzero and no
    ReLU input sits exactly on its kink.
    """
    if size < 4 or size % 4:
        raise ConfigurationError(f"Gradient-check size must be a positive multiple of 4, got {size}")
    if samples < 0:
        raise ConfigurationError(f"samples must be >= 0, got {samples}")

    with precision(np.float64):
        rng = np.random.default_rng(seed)
        model = MimoUNet(config, rng=rng)
        blurry = Tensor(rng.random((1, 3, size, size)))
        targets = build_pyramid(Tensor(rng.random((1, 3, size, size))), config.levels, mode="target")
        target_levels = targets.levels if config.enable_mosd else targets.levels[:1]

        def evaluate() -> float:
            with no_grad():
                return total_loss(model(blurry), target_levels, lam).l_total

        report = total_loss(model(blurry), target_levels, lam)
        backward(report.objective)
        result = GradCheckReport(loss=report.l_total)

        for name, param in model.named_parameters():
            analytic = param.grad if param.grad is not None else np.zeros_like(param.data)
            flat_count = param.size
            if samples == 0 or samples >= flat_count:
                picks = np.arange(flat_count)
            else:
                picks = rng.choice(flat_count, size=samples, replace=False)
            worst = 0.0
            for flat in picks:
                index = np.unravel_index(int(flat), param.shape)
                numeric = finite_difference(evaluate, param.data, index, eps)
                error = relative_error(float(analytic[index]), numeric)
                worst = max(worst, error)
            result.per_tensor[name] = worst
            result.entries_checked += len(picks)
            if progress is not None:
                progress(name, worst)
    return result
