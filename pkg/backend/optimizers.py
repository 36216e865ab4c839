from abc import ABC, abstractmethod
from typing import List, Optional, Sequence

import numpy as np

from errors import ParameterError
from models import OptimKind, OptimSpec
from tensor import Tensor


def grad_norm(params: Sequence[Tensor]) -> float:
    """Global L2 norm of all gradients present"""
    total = sum(float(np.sum(np.square(p.grad, dtype=np.float64))) for p in params if p.grad is not None)
    return float(np.sqrt(total))


def clip_gradients(params: Sequence[Tensor], clip_value: Optional[float], mode: str = "value") -> float:
    """Clip gradients in place, elementwise to +-clip_value or jointly to norm clip_value.

    Returns the norm before clipping.
    """
    norm = grad_norm(params)
    if clip_value is None:
        return norm
    if mode == "value":
        for param in params:
            if param.grad is not None:
                np.clip(param.grad, -clip_value, clip_value, out=param.grad)
    elif mode == "norm":
        if norm > clip_value:
            scale = clip_value / norm
            for param in params:
                if param.grad is not None:
                    param.grad *= scale
    else:
        raise ParameterError(f"unknown clip mode: {mode}")
    return norm


class Optimizer(ABC):
    """Updates a fixed list of parameters from their gradients"""

    def __init__(self, params: Sequence[Tensor], learning_rate: float, weight_decay: float = 0.0):
        self.params: List[Tensor] = list(params)
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.steps = 0

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def _l2_grad(self, param: Tensor) -> np.ndarray:
        if self.weight_decay:
            return param.grad + self.weight_decay * param.data
        return param.grad

    def step(self) -> None:
        self.steps += 1
        for index, param in enumerate(self.params):
            if param.grad is not None:
                self._update(index, param)

    @abstractmethod
    def _update(self, index: int, param: Tensor) -> None:
        pass


class SGD(Optimizer):
    def _update(self, index: int, param: Tensor) -> None:
        param.data = param.data - self.learning_rate * self._l2_grad(param)


class Adam(Optimizer):
    """Adam with bias-corrected moments; weight decay enters as an L2 gradient term"""

    def __init__(self, params: Sequence[Tensor], learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, weight_decay: float = 0.0):
        super().__init__(params, learning_rate, weight_decay)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def _gradient(self, param: Tensor) -> np.ndarray:
        return self._l2_grad(param)

    def _update(self, index: int, param: Tensor) -> None:
        grad = self._gradient(param)
        self.m[index] = self.beta1 * self.m[index] + (1 - self.beta1) * grad
        self.v[index] = self.beta2 * self.v[index] + (1 - self.beta2) * grad * grad
        m_hat = self.m[index] / (1 - self.beta1 ** self.steps)
        v_hat = self.v[index] / (1 - self.beta2 ** self.steps)
        param.data = param.data - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


class AdamW(Adam):
    """Adam with decoupled weight decay"""

    def _gradient(self, param: Tensor) -> np.ndarray:
        return param.grad

    def _update(self, index: int, param: Tensor) -> None:
        if self.weight_decay:
            param.data = param.data * (1 - self.learning_rate * self.weight_decay)
        super()._update(index, param)


def build_optimizer(spec: OptimSpec, params: Sequence[Tensor]) -> Optimizer:
    if spec.kind == OptimKind.SGD:
        return SGD(params, spec.learning_rate, spec.weight_decay)
    if spec.kind == OptimKind.ADAM:
        return Adam(params, spec.learning_rate, spec.beta1, spec.beta2, spec.adam_eps, spec.weight_decay)
    if spec.kind == OptimKind.ADAMW:
        return AdamW(params, spec.learning_rate, spec.beta1, spec.beta2, spec.adam_eps, spec.weight_decay)
    raise ParameterError(f"unknown optimizer: {spec.kind}")
