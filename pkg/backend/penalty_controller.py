import logging
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from errors import ContractError, ParameterError
from models import PenaltySettings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PenaltyState:
    """Running penalty estimate of adaptive PENEX training"""
    rho: Optional[float] = None     # undefined until the first update
    beta: float = 0.1
    rho_min: float = 1e-6
    rho_max: float = 100.0
    eps_guard: float = 1e-12
    initialized: bool = False
    step: int = 0
    clip_before_ema: bool = False

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ParameterError(f"beta must lie in (0, 1], got {self.beta}")
        if not 0 < self.rho_min < self.rho_max:
            raise ParameterError("clip bounds must satisfy 0 < rho_min < rho_max")

    @classmethod
    def from_settings(cls, settings: PenaltySettings) -> "PenaltyState":
        return cls(
            beta=settings.beta,
            rho_min=settings.rho_min,
            rho_max=settings.rho_max,
            eps_guard=settings.eps_guard,
            clip_before_ema=settings.clip_before_ema,
        )

    def clip(self, value: float) -> float:
        return float(np.clip(value, self.rho_min, self.rho_max))


def estimate_rho_batch(ex_batch_mean: float, se_batch_mean: float, alpha: float, eps_guard: float) -> float:
    """Penalty that minimizes the margin bound for the current batch: alpha * EX / (SumExp + eps)"""
    if ex_batch_mean < 0 or se_batch_mean < 0:
        raise ContractError("batch means of EX and SumExp must be nonnegative")
    if not alpha > 0:
        raise ContractError(f"alpha must be positive, got {alpha}")
    return alpha * ex_batch_mean / (se_batch_mean + eps_guard)


def update(state: PenaltyState, rho_prime: float) -> PenaltyState:
    """One EMA step towards ``rho_prime``, clipped to the state's bounds.

    The first call seeds the average with ``rho_prime`` itself, so the first
    smoothed value equals the (clipped) batch estimate.
    """
    if rho_prime < 0:
        raise ContractError(f"batch estimate must be nonnegative, got {rho_prime}")
    if state.clip_before_ema:
        rho_prime = state.clip(rho_prime)
    previous = state.rho if state.initialized else rho_prime
    smoothed = (1 - state.beta) * previous + state.beta * rho_prime
    return replace(state, rho=state.clip(smoothed), initialized=True, step=state.step + 1)


class PenaltyController:
    """Owns the penalty state of one training run and records its trajectory"""

    def __init__(self, settings: PenaltySettings, alpha: float):
        self.alpha = alpha
        self.state = PenaltyState.from_settings(settings)
        self.trajectory: List[float] = []

    @property
    def rho(self) -> Optional[float]:
        return self.state.rho

    def observe(self, ex_batch_mean: float, se_batch_mean: float) -> float:
        """Fold one batch into the estimate and return the penalty to use for it"""
        rho_prime = estimate_rho_batch(ex_batch_mean, se_batch_mean, self.alpha, self.state.eps_guard)
        self.state = update(self.state, rho_prime)
        self.trajectory.append(self.state.rho)
        logger.debug("step %d: rho'=%.6g rho=%.6g", self.state.step, rho_prime, self.state.rho)
        return self.state.rho

    def rollback(self, previous: PenaltyState) -> None:
        """Forget every observation made since ``previous`` was current"""
        self.state = previous
        del self.trajectory[previous.step:]
