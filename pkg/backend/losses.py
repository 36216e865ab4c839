"""Classification losses over logits, plus margins and the PENEX inference transform"""

from typing import Optional, Sequence, Union

import numpy as np

from errors import ContractError, DimensionError, DivergenceError, ParameterError
from models import LossKind, LossSpec
from tensor import Tensor, gather_labels, log_sum_exp, no_grad, power, softmax


def _require_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ParameterError(f"{name} must be positive, got {value}")


def _require_matrix(logits: Tensor) -> None:
    if logits.ndim != 2 or logits.shape[0] == 0:
        raise DimensionError(f"expected a non-empty n x K logits matrix, got shape {logits.shape}")


def _log_max(logits: Tensor) -> float:
    return float(np.log(np.finfo(logits.data.dtype).max))


def ex_loss(logits: Tensor, labels: Sequence[int], alpha: float) -> Tensor:
    """Mean of exp(-alpha * true logit)"""
    _require_positive("alpha", alpha)
    _require_matrix(logits)
    exponent = gather_labels(logits, labels) * (-alpha)
    if np.any(exponent.data > _log_max(logits)):
        raise DivergenceError("EX term overflows")
    return exponent.exp().mean()


def sum_exp_mean(logits: Tensor) -> Tensor:
    """Mean over rows of sum_j exp(logits[i, j]), evaluated as exp(log_sum_exp)"""
    _require_matrix(logits)
    lse = log_sum_exp(logits)
    if not np.all(np.isfinite(lse.data)) or np.any(lse.data > _log_max(logits)):
        raise DivergenceError("SumExp term overflows")
    return lse.exp().mean()


def penex_loss(logits: Tensor, labels: Sequence[int], alpha: float, rho: float) -> Tensor:
    _require_positive("rho", rho)
    return ex_loss(logits, labels, alpha) + sum_exp_mean(logits) * rho


def _per_sample_ce(logits: Tensor, labels: Sequence[int]) -> Tensor:
    _require_matrix(logits)
    return log_sum_exp(logits) - gather_labels(logits, labels)


def cross_entropy(logits: Tensor, labels: Sequence[int]) -> Tensor:
    return _per_sample_ce(logits, labels).mean()


def label_smoothing_loss(logits: Tensor, labels: Sequence[int], eps: float) -> Tensor:
    """Cross-entropy against (1 - eps) * onehot + eps / K"""
    if not 0 <= eps <= 1:
        raise ParameterError(f"smoothing eps must lie in [0, 1], got {eps}")
    _require_matrix(logits)
    num_classes = logits.shape[1]
    target_term = gather_labels(logits, labels) * (1 - eps) + logits.sum(axis=1) * (eps / num_classes)
    return (log_sum_exp(logits) - target_term).mean()


def softmax_entropy(logits: Tensor) -> Tensor:
    """Per-row Shannon entropy of softmax(logits)"""
    probs = softmax(logits)
    return log_sum_exp(logits) - (probs * logits).sum(axis=1)


def confidence_penalty_loss(logits: Tensor, labels: Sequence[int], lam: float) -> Tensor:
    """Cross-entropy minus lam times the mean predictive entropy"""
    if lam < 0:
        raise ParameterError(f"confidence penalty must be nonnegative, got {lam}")
    ce = cross_entropy(logits, labels)
    if lam == 0:
        return ce
    return ce - softmax_entropy(logits).mean() * lam


def focal_loss(logits: Tensor, labels: Sequence[int], gamma: float) -> Tensor:
    if gamma < 0:
        raise ParameterError(f"focal gamma must be nonnegative, got {gamma}")
    ce = _per_sample_ce(logits, labels)
    p_true = (-ce).exp()
    return (power(1.0 - p_true, gamma) * ce).mean()


def mean_h_squared(logits: Union[Tensor, np.ndarray]) -> float:
    """Batch mean of h(x)^2 with h(x) the row sum of the logits"""
    values = np.asarray(logits, dtype=np.float64)
    return float(np.mean(values.sum(axis=1) ** 2))


def _zero_sum_penalty(logits: Tensor, rho: float, verbatim: bool) -> Tensor:
    row_sums = logits.sum(axis=1)
    mean_sq = (row_sums * row_sums).mean()
    if verbatim:
        return mean_sq * mean_sq * (rho / 2)
    return mean_sq * (rho / 2)


def conex_sq_penalty_loss(
    logits: Tensor, labels: Sequence[int], rho: float, alpha: float, verbatim: bool = True
) -> Tensor:
    """EX plus a quadratic penalty on the zero-sum constraint.

    With ``verbatim`` the penalty is (rho/2) * (E[h^2])^2, otherwise (rho/2) * E[h^2].
    """
    _require_positive("rho", rho)
    return ex_loss(logits, labels, alpha) + _zero_sum_penalty(logits, rho, verbatim)


def conex_aug_lagrangian_loss(
    logits: Tensor,
    labels: Sequence[int],
    rho: float,
    alpha: float,
    dual: float,
    verbatim: bool = True,
) -> Tensor:
    """Primal objective of the augmented Lagrangian: penalized EX plus dual * E[h^2]"""
    loss = conex_sq_penalty_loss(logits, labels, rho, alpha, verbatim)
    row_sums = logits.sum(axis=1)
    return loss + (row_sums * row_sums).mean() * dual


def al_dual_update(lambda_prev: float, rho: float, nu: float, mean_h_sq: float) -> float:
    _require_positive("rho", rho)
    _require_positive("nu", nu)
    if mean_h_sq < 0:
        raise ContractError("mean of squared constraint values cannot be negative")
    return lambda_prev + (rho / nu) * mean_h_sq


def margin(logits: Union[Tensor, np.ndarray], labels: Sequence[int]) -> np.ndarray:
    """True logit minus the largest competing logit, per row"""
    values = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if values.ndim != 2:
        raise DimensionError(f"expected an n x K matrix, got shape {values.shape}")
    if values.shape[1] < 2:
        raise ContractError("margin is undefined for a single class")
    if labels.shape != (values.shape[0],):
        raise DimensionError(f"expected {values.shape[0]} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= values.shape[1]):
        raise ContractError(f"labels must lie in [0, {values.shape[1]})")
    rows = np.arange(values.shape[0])
    true_logit = values[rows, labels]
    others = values.copy()
    others[rows, labels] = -np.inf
    return true_logit - others.max(axis=1)


def penex_inference_probs(logits: Union[Tensor, np.ndarray], alpha: float) -> Tensor:
    """Class probabilities softmax((1 + alpha) * logits)"""
    _require_positive("alpha", alpha)
    if not isinstance(logits, Tensor):
        logits = Tensor(logits)
    with no_grad():
        return softmax(logits * (1 + alpha))


def predictive_probs(logits: Union[Tensor, np.ndarray], spec: LossSpec) -> np.ndarray:
    """Probabilities used for calibration metrics: rescaled for EX-type losses, plain softmax otherwise"""
    if spec.kind in (LossKind.EX, LossKind.PENEX):
        return penex_inference_probs(logits, spec.alpha).data
    if not isinstance(logits, Tensor):
        logits = Tensor(logits)
    with no_grad():
        return softmax(logits).data


def compute_loss(
    spec: LossSpec,
    logits: Tensor,
    labels: Sequence[int],
    rho: Optional[float] = None,
    dual: float = 0.0,
) -> Tensor:
    """Evaluate the loss selected by ``spec``.

    ``rho`` overrides ``spec.rho`` and is required when ``spec.rho`` asks for
    an adaptive penalty. ``dual`` is the current multiplier of the augmented
    Lagrangian variant.
    """
    kind = spec.kind
    if rho is None:
        if spec.rho == "adaptive" and kind in (LossKind.PENEX, LossKind.CONEX_SQ_PENALTY,
                                               LossKind.CONEX_AUG_LAGRANGIAN):
            raise ParameterError(f"{kind.value} needs a numeric rho")
        rho = spec.rho

    if kind == LossKind.EX or kind == LossKind.CONEX_HARD:
        # the hard variant enforces the constraint in the model output
        return ex_loss(logits, labels, spec.alpha)
    if kind == LossKind.PENEX:
        return penex_loss(logits, labels, spec.alpha, rho)
    if kind == LossKind.CE:
        return cross_entropy(logits, labels)
    if kind == LossKind.LABEL_SMOOTHING:
        return label_smoothing_loss(logits, labels, spec.smooth_eps)
    if kind == LossKind.CONFIDENCE_PENALTY:
        return confidence_penalty_loss(logits, labels, spec.conf_lambda)
    if kind == LossKind.FOCAL:
        return focal_loss(logits, labels, spec.focal_gamma)
    if kind == LossKind.CONEX_SQ_PENALTY:
        return conex_sq_penalty_loss(logits, labels, rho, spec.alpha, spec.verbatim_sq_penalty)
    if kind == LossKind.CONEX_AUG_LAGRANGIAN:
        return conex_aug_lagrangian_loss(logits, labels, rho, spec.alpha, dual, spec.verbatim_sq_penalty)
    raise ParameterError(f"unknown loss kind: {kind}")
