import logging
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from errors import ParameterError
from losses import margin, predictive_probs
from models import LossSpec, MarginHistogram, MetricsReport
from tensor import Tensor

logger = logging.getLogger(__name__)

CE_CLAMP = 1e-12
QUANTILES = {"p05": 5, "p25": 25, "p50": 50, "p75": 75, "p95": 95}

ArrayLike = Union[np.ndarray, Tensor]


def _arrays(probs: ArrayLike, labels: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    return np.asarray(probs, dtype=np.float64), np.asarray(labels, dtype=np.int64)


def accuracy(probs: ArrayLike, labels: Sequence[int]) -> float:
    """Share of rows whose argmax (lowest index on ties) is the label"""
    probs, labels = _arrays(probs, labels)
    return float(np.mean(np.argmax(probs, axis=1) == labels))


def ece(probs: ArrayLike, labels: Sequence[int], bins: int = 15) -> float:
    """Expected calibration error over equal-width bins ((m-1)/M, m/M].

    Confidence 0 falls into the first bin.
    """
    if bins < 1:
        raise ParameterError(f"ece needs at least one bin, got {bins}")
    probs, labels = _arrays(probs, labels)
    confidence = probs.max(axis=1)
    correct = (np.argmax(probs, axis=1) == labels).astype(np.float64)
    edges = np.linspace(0.0, 1.0, bins + 1)
    bin_index = np.clip(np.searchsorted(edges, confidence, side="left") - 1, 0, bins - 1)

    n = probs.shape[0]
    total = 0.0
    for m in range(bins):
        members = bin_index == m
        count = int(members.sum())
        if count == 0:
            continue
        total += (count / n) * abs(correct[members].mean() - confidence[members].mean())
    return float(total)


def brier(probs: ArrayLike, labels: Sequence[int]) -> float:
    probs, labels = _arrays(probs, labels)
    onehot = np.eye(probs.shape[1])[labels]
    return float(np.mean(np.sum((probs - onehot) ** 2, axis=1)))


def _true_class_probs(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return probs[np.arange(probs.shape[0]), labels]


def eval_ce(probs: ArrayLike, labels: Sequence[int]) -> float:
    """Negative log-likelihood of the labels; true-class probabilities are clamped at 1e-12"""
    probs, labels = _arrays(probs, labels)
    p_true = _true_class_probs(probs, labels)
    if np.any(p_true < CE_CLAMP):
        logger.warning("%d true-class probabilities below %g were clamped", int(np.sum(p_true < CE_CLAMP)), CE_CLAMP)
    return float(np.mean(-np.log(np.maximum(p_true, CE_CLAMP))))


def ce_saturated(probs: ArrayLike, labels: Sequence[int]) -> bool:
    probs, labels = _arrays(probs, labels)
    return bool(np.any(_true_class_probs(probs, labels) < CE_CLAMP))


def margin_quantiles(margins: np.ndarray) -> dict:
    return {name: float(np.percentile(margins, q)) for name, q in QUANTILES.items()}


def margin_histogram(margins: np.ndarray, bins: int = 50) -> MarginHistogram:
    counts, edges = np.histogram(margins, bins=bins)
    return MarginHistogram(edges=edges.tolist(), counts=counts.tolist())


def evaluate(logits: ArrayLike, labels: Sequence[int], loss_spec: LossSpec, bins: int = 15) -> MetricsReport:
    """All metrics for one split.

    Probabilities follow the inference rule of the loss; margins and logit
    diagnostics use the raw logits.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    probs = predictive_probs(logits, loss_spec)
    margins = margin(logits, labels)
    return MetricsReport(
        acc=accuracy(probs, labels),
        ece=ece(probs, labels, bins),
        ce=eval_ce(probs, labels),
        brier=brier(probs, labels),
        mean_margin=float(np.mean(margins)),
        margin_quantiles=margin_quantiles(margins),
        n=int(labels.shape[0]),
        ce_saturated=ce_saturated(probs, labels),
        mean_abs_logit=float(np.mean(np.abs(logits))),
        max_abs_logit_sum=float(np.max(np.abs(logits.sum(axis=1)))),
    )


def bootstrap(
    probs: ArrayLike,
    labels: Sequence[int],
    metric: Callable[[np.ndarray, np.ndarray], float],
    n_boot: int = 100,
    seed: int = 0,
) -> Tuple[float, float]:
    """Mean and standard deviation of ``metric`` over resampled evaluation sets"""
    probs, labels = _arrays(probs, labels)
    rng = np.random.default_rng(seed)
    n = labels.shape[0]
    values = []
    for _ in range(n_boot):
        sample = rng.integers(0, n, size=n)
        values.append(metric(probs[sample], labels[sample]))
    return float(np.mean(values)), float(np.std(values))
