"""Multi-class AdaBoost (SAMME) over decision stumps"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from datasets import Dataset
from errors import ContractError, ParameterError
from losses import margin

logger = logging.getLogger(__name__)

# classifier weight used for a perfect stump, before the ln(K-1) term
ETA_CAP = math.log(1e12)


@dataclass(frozen=True)
class Stump:
    """Single split: left_class when x[feature_index] <= threshold, right_class otherwise"""
    feature_index: int
    threshold: float
    left_class: int
    right_class: int

    def predict(self, features: np.ndarray) -> np.ndarray:
        left = features[:, self.feature_index] <= self.threshold
        return np.where(left, self.left_class, self.right_class).astype(np.int64)


@dataclass
class RoundRecord:
    round: int
    epsilon: float
    eta: float
    train_acc: float
    mean_margin: float


@dataclass
class Ensemble:
    """Weighted stump vote"""
    num_classes: int
    members: List[Tuple[Stump, float]] = field(default_factory=list)
    rounds: List[RoundRecord] = field(default_factory=list)
    stopped_early: bool = False
    seed: int = 0


@dataclass
class SammeRound:
    stump: Stump
    eta: float
    weights: np.ndarray
    epsilon: float
    accepted: bool


def _best_split(values: np.ndarray, class_weights: np.ndarray) -> Tuple[float, float, int, int]:
    """Lowest weighted error over the thresholds of one feature.

    Candidates are -inf, the midpoints of consecutive unique values and +inf,
    scanned in increasing order so that the first minimum wins.
    """
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    cumulative = np.cumsum(class_weights[order], axis=0)
    total = cumulative[-1]

    unique = np.unique(sorted_values)
    left_counts = np.searchsorted(sorted_values, unique[:-1], side="right")
    thresholds = np.concatenate([[-np.inf], (unique[:-1] + unique[1:]) / 2, [np.inf]])
    num_classes = class_weights.shape[1]
    left_mass = np.vstack([np.zeros((1, num_classes)), cumulative[left_counts - 1], total[None, :]])
    left_sizes = np.concatenate([[0], left_counts, [values.shape[0]]])

    best = (math.inf, 0.0, 0, 0)
    for index, threshold in enumerate(thresholds):
        left = left_mass[index]
        right = total - left
        right_class = int(np.argmax(right))
        left_class = int(np.argmax(left))
        # an empty side predicts the class of the other side
        if left_sizes[index] == 0:
            left_class = right_class
        elif left_sizes[index] == values.shape[0]:
            right_class = left_class
        error = float(1.0 - left[left_class] - right[right_class])
        if error < best[0] - 1e-12:
            best = (error, float(threshold), left_class, right_class)
    return best


def fit_stump(features: np.ndarray, labels: np.ndarray, weights: np.ndarray, num_classes: int) -> Stump:
    """Exhaustive search for the stump with the smallest weighted 0-1 error.

    Ties go to the smallest (feature_index, threshold).
    """
    if features.shape[0] == 0:
        raise ContractError("cannot fit a stump to an empty dataset")
    if np.any(weights < 0) or not math.isclose(float(weights.sum()), 1.0, abs_tol=1e-9):
        raise ContractError("stump weights must be a probability vector")
    class_weights = np.eye(num_classes)[labels] * weights[:, None]

    best_error, best_stump = math.inf, None
    for feature_index in range(features.shape[1]):
        error, threshold, left_class, right_class = _best_split(features[:, feature_index], class_weights)
        if error < best_error - 1e-12:
            best_error = error
            best_stump = Stump(feature_index, threshold, left_class, right_class)
    return best_stump


def classifier_weight(epsilon: float, num_classes: int) -> float:
    """eta = ln((1 - eps) / eps) + ln(K - 1), capped for a perfect stump"""
    if num_classes < 2:
        raise ParameterError("boosting needs at least two classes")
    if epsilon <= 0:
        return ETA_CAP + math.log(num_classes - 1)
    return math.log((1 - epsilon) / epsilon) + math.log(num_classes - 1)


def samme_round(features: np.ndarray, labels: np.ndarray, weights: np.ndarray, num_classes: int,
                listing_update: bool = False) -> SammeRound:
    """Fit one stump and reweight the points.

    Misclassified points are multiplied by exp(eta) before normalization. With
    ``listing_update`` they are multiplied by exp(-eta) instead. A stump no
    better than chance, eps >= (K-1)/K, is returned with ``accepted=False``
    and the weights untouched.
    """
    stump = fit_stump(features, labels, weights, num_classes)
    wrong = stump.predict(features) != labels
    epsilon = float(np.clip(np.sum(weights[wrong]), 0.0, 1.0))
    if epsilon >= (num_classes - 1) / num_classes:
        return SammeRound(stump, 0.0, weights, epsilon, accepted=False)

    eta = classifier_weight(epsilon, num_classes)
    sign = -1.0 if listing_update else 1.0
    updated = weights * np.exp(sign * eta * wrong)
    return SammeRound(stump, eta, updated / updated.sum(), epsilon, accepted=True)


def ensemble_scores(ensemble: Ensemble, features: np.ndarray) -> np.ndarray:
    """Per-class vote totals sum_m eta_m * 1{g_m(x) = k}"""
    scores = np.zeros((features.shape[0], ensemble.num_classes))
    rows = np.arange(features.shape[0])
    for stump, eta in ensemble.members:
        scores[rows, stump.predict(features)] += eta
    return scores


def ensemble_predict(ensemble: Ensemble, features: np.ndarray) -> np.ndarray:
    """Class with the largest vote, lowest index on ties"""
    return np.argmax(ensemble_scores(ensemble, features), axis=1)


def ensemble_margins(ensemble: Ensemble, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return margin(ensemble_scores(ensemble, features), labels)


def samme_train(data: Dataset, rounds: int, seed: int = 0, listing_update: bool = False,
                weights: Optional[np.ndarray] = None) -> Ensemble:
    """Run up to ``rounds`` SAMME rounds from uniform weights.

    Stops early, with a warning, when a round is rejected. The stump search
    is deterministic; ``seed`` is recorded on the ensemble.
    """
    if rounds < 1:
        raise ParameterError(f"need at least one boosting round, got {rounds}")
    ensemble = Ensemble(num_classes=data.num_classes, seed=seed)
    weights = np.full(data.n, 1.0 / data.n) if weights is None else np.asarray(weights, dtype=np.float64)

    for index in range(1, rounds + 1):
        result = samme_round(data.features, data.labels, weights, data.num_classes, listing_update)
        if not result.accepted:
            ensemble.stopped_early = True
            logger.warning("Boosting stopped at round %d: weighted error %.4f is no better than chance",
                           index, result.epsilon)
            break
        weights = result.weights
        ensemble.members.append((result.stump, result.eta))
        predictions = ensemble_predict(ensemble, data.features)
        record = RoundRecord(
            round=index,
            epsilon=result.epsilon,
            eta=result.eta,
            train_acc=float(np.mean(predictions == data.labels)),
            mean_margin=float(np.mean(ensemble_margins(ensemble, data.features, data.labels))),
        )
        ensemble.rounds.append(record)
        logger.info("Round %d: eps=%.4f eta=%.4f train_acc=%.4f", index, record.epsilon, record.eta, record.train_acc)
    return ensemble
