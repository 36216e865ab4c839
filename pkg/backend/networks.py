import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from errors import DimensionError, ParameterError
from models import ModelSpec
from tensor import Tensor, no_grad

logger = logging.getLogger(__name__)


def zero_sum_basis(num_classes: int) -> np.ndarray:
    """(K-1) x K matrix [I | -1] mapping K-1 free logits onto the zero-sum surface"""
    return np.hstack([np.eye(num_classes - 1), -np.ones((num_classes - 1, 1))])


class MLPClassifier:
    """Fully connected ReLU network producing one logit per class.

    Layer weights are stored as (out, in) matrices and applied as ``x @ W.T + b``.
    With ``conex_hard`` the last layer emits K-1 free logits and the K-th is
    their negative sum.
    """

    def __init__(self, spec: ModelSpec, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        if len(weights) != len(biases) or len(weights) != len(spec.hidden_dims) + 1:
            raise DimensionError("one weight and one bias per layer expected")
        self.spec = spec
        self.weights: List[Tensor] = [Tensor(w, requires_grad=True) for w in weights]
        self.biases: List[Tensor] = [Tensor(b, requires_grad=True) for b in biases]
        self._basis = Tensor(zero_sum_basis(spec.num_classes), dtype=self.weights[0].data.dtype) \
            if spec.conex_hard else None

    @property
    def num_classes(self) -> int:
        return self.spec.num_classes

    def parameters(self) -> List[Tensor]:
        params = []
        for weight, bias in zip(self.weights, self.biases):
            params.extend([weight, bias])
        return params

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def forward(self, x: Union[Tensor, np.ndarray], rng: Optional[np.random.Generator] = None) -> Tensor:
        """Logits for a batch; ``rng`` turns on inverted dropout after every hidden layer"""
        if not isinstance(x, Tensor):
            x = Tensor(x, dtype=self.weights[0].data.dtype)
        if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise DimensionError(f"expected inputs of shape (n, {self.spec.input_dim}), got {x.shape}")

        hidden = x
        last = len(self.weights) - 1
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            hidden = hidden @ weight.T + bias
            if index == last:
                break
            hidden = hidden.relu()
            if rng is not None and self.spec.dropout_p > 0:
                keep = 1.0 - self.spec.dropout_p
                mask = (rng.random(hidden.shape) < keep) / keep
                hidden = hidden * Tensor(mask, dtype=hidden.data.dtype)

        if self._basis is not None:
            hidden = hidden @ self._basis
        return hidden

    __call__ = forward

    def predict_logits(self, x: np.ndarray) -> np.ndarray:
        with no_grad():
            return self.forward(x).data

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.data.ravel() for p in self.parameters()]).astype(np.float64)

    def get_flat_grad(self) -> np.ndarray:
        return np.concatenate([
            (p.grad if p.grad is not None else np.zeros_like(p.data)).ravel() for p in self.parameters()
        ]).astype(np.float64)

    def set_flat(self, vector: np.ndarray) -> None:
        vector = np.asarray(vector)
        if vector.size != self.num_parameters():
            raise DimensionError(f"expected {self.num_parameters()} values, got {vector.size}")
        offset = 0
        for param in self.parameters():
            chunk = vector[offset: offset + param.size]
            param.data = chunk.reshape(param.shape).astype(param.data.dtype)
            offset += param.size

    def save(self, path: Union[str, Path]) -> None:
        arrays = {}
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            arrays[f"W{index}"] = weight.data
            arrays[f"b{index}"] = bias.data
        np.savez(path, **arrays)
        logger.info("Saved model with %d parameters to %s", self.num_parameters(), path)


def _resolved(spec: ModelSpec) -> ModelSpec:
    if spec.input_dim is None or spec.num_classes is None:
        raise ParameterError("input_dim and num_classes must be set before building a model")
    return spec


def layer_shapes(spec: ModelSpec) -> List[tuple]:
    spec = _resolved(spec)
    outputs = spec.num_classes - 1 if spec.conex_hard else spec.num_classes
    widths = [spec.input_dim, *spec.hidden_dims, outputs]
    return [(fan_out, fan_in) for fan_in, fan_out in zip(widths[:-1], widths[1:])]


def init_model(spec: ModelSpec, seed: int, dtype: str = "float64") -> MLPClassifier:
    """Weights from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases"""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_out, fan_in in layer_shapes(spec):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return MLPClassifier(spec, weights, biases)


def load_model(path: Union[str, Path], spec: ModelSpec) -> MLPClassifier:
    with np.load(path) as archive:
        layers = len(spec.hidden_dims) + 1
        weights = [archive[f"W{i}"] for i in range(layers)]
        biases = [archive[f"b{i}"] for i in range(layers)]
    expected = layer_shapes(spec)
    if [w.shape for w in weights] != expected:
        raise DimensionError(f"stored weights do not match the model spec: expected {expected}")
    return MLPClassifier(spec, weights, biases)


def geometric_margins(model: MLPClassifier, features: np.ndarray, labels: np.ndarray,
                      steps: int = 50, tol: float = 1e-9) -> np.ndarray:
    """Signed input-space distance from each point to the decision boundary of its class.

    Every point is projected repeatedly onto the linearized boundary between its
    class and the strongest rival, the DeepFool search for a minimal
    perturbation. Correctly classified points get positive distances.
    """
    origin = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    rows = np.arange(origin.shape[0])
    point = origin.copy()
    start_gap = None

    for _ in range(steps):
        inputs = Tensor(point, requires_grad=True)
        logits = model.forward(inputs)
        values = logits.data.astype(np.float64)
        rivals = values.copy()
        rivals[rows, labels] = -np.inf
        rival = np.argmax(rivals, axis=1)
        gap = values[rows, labels] - values[rows, rival]
        if start_gap is None:
            start_gap = gap
        active = np.abs(gap) > tol
        if not np.any(active):
            break

        selector = np.zeros_like(values)
        selector[rows, labels] = 1.0
        selector[rows, rival] = -1.0
        (logits * selector).sum().backward()
        grad = np.asarray(inputs.grad, dtype=np.float64)
        model.zero_grad()

        norm_sq = np.sum(grad ** 2, axis=1)
        movable = active & (norm_sq > 0)
        point[movable] -= (gap[movable] / norm_sq[movable])[:, None] * grad[movable]

    return np.sign(start_gap) * np.linalg.norm(point - origin, axis=1)
