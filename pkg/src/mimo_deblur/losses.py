"""Multi-scale content loss, multi-scale frequency reconstruction loss and their sum."""

from typing import Sequence

from mimo_deblur.core import ops
from mimo_deblur.core.entities import LossReport
from mimo_deblur.core.errors import ConfigurationError, UsageError
from mimo_deblur.core.tensor import Tensor, no_grad

DEFAULT_LAMBDA = 0.1


def _check_pyramids(predictions: Sequence[Tensor], targets: Sequence[Tensor]) -> None:
    if len(predictions) != len(targets):
        raise UsageError(
            f"Got {len(predictions)} predicted levels for {len(targets)} target levels"
        )
    if not predictions:
        raise UsageError("Loss needs at least one level")
    for level, (pred, target) in enumerate(zip(predictions, targets), start=1):
        if pred.shape != target.shape:
            raise UsageError(
                f"Level {level}: prediction {pred.shape} vs target {target.shape}"
            )


def _sum(terms: list[Tensor]) -> Tensor:
    result = terms[0]
    for term in terms[1:]:
        result = ops.add(result, term)
    return result


def content_loss(predictions: Sequence[Tensor], targets: Sequence[Tensor]) -> Tensor:
    """Sum over levels of the mean absolute error at that level."""
    _check_pyramids(predictions, targets)
    return _sum([ops.l1_mean(pred, target) for pred, target in zip(predictions, targets)])


def msfr_loss(predictions: Sequence[Tensor], targets: Sequence[Tensor]) -> Tensor:
    """Sum over levels of the L1 distance between DFT spectra, real and imaginary parts apart.

    Each level is normalized by the pixel-element count of that level, the
    same count the content loss uses.
    """
    _check_pyramids(predictions, targets)
    terms = []
    for pred, target in zip(predictions, targets):
        pred_spec = ops.fft2(pred)
        target_spec = ops.fft2(target)
        terms.append(ops.l1_mean(pred_spec.real, target_spec.real))
        terms.append(ops.l1_mean(pred_spec.imag, target_spec.imag))
    return _sum(terms)


def total_loss(
    predictions: Sequence[Tensor],
    targets: Sequence[Tensor],
    lam: float = DEFAULT_LAMBDA,
) -> LossReport:
    """Content loss plus ``lam`` times the frequency loss.

    With ``lam == 0`` the frequency term is still reported but kept out of
    the graph.
    """
    if lam < 0:
        raise ConfigurationError(f"lambda must be non-negative, got {lam}")
    cont = content_loss(predictions, targets)
    if lam == 0:
        with no_grad():
            msfr = msfr_loss(predictions, targets)
        objective = cont
    else:
        msfr = msfr_loss(predictions, targets)
        objective = ops.add(cont, ops.mul(msfr, lam))
    return LossReport.combine(cont.item(), msfr.item(), lam, objective=objective)
