"""Mini-batch training loop for MLP classifiers, including adaptive PENEX"""

import logging
import math
import time
from typing import Callable, Optional

import numpy as np

from datasets import Dataset
from errors import DivergenceError, ParameterError
from losses import al_dual_update, compute_loss, ex_loss, margin, mean_h_squared, sum_exp_mean
from metrics import evaluate, margin_histogram
from models import EpochRecord, LossKind, MetricsReport, ModelSpec, RunReport, StepLog, TrainConfig
from networks import MLPClassifier, init_model
from optimizers import Optimizer, build_optimizer, clip_gradients
from penalty_controller import PenaltyController, PenaltyState

logger = logging.getLogger(__name__)


def resolve_model_spec(config: TrainConfig, data: Dataset) -> ModelSpec:
    """Fill the data-dependent parts of the model spec"""
    spec = config.model.model_copy(update={
        "input_dim": data.dim,
        "num_classes": data.num_classes,
        "conex_hard": config.model.conex_hard or config.loss.kind == LossKind.CONEX_HARD,
    })
    if spec.num_classes < 2:
        raise ParameterError("training needs at least two classes")
    return spec


def fixed_rho(config: TrainConfig) -> Optional[float]:
    rho = config.loss.rho
    return None if rho == "adaptive" else float(rho)


class TrainState:
    """Mutable state of one run: model, optimizer, penalty controller and dual variable"""

    def __init__(self, config: TrainConfig, model: MLPClassifier, optimizer: Optimizer,
                 controller: Optional[PenaltyController] = None):
        self.config = config
        self.model = model
        self.optimizer = optimizer
        self.controller = controller
        self.dual = 0.0
        self.step = 0

    @classmethod
    def create(cls, config: TrainConfig, data: Dataset) -> "TrainState":
        model = init_model(resolve_model_spec(config, data), config.seed, config.precision)
        optimizer = build_optimizer(config.optim, model.parameters())
        controller = PenaltyController(config.penalty, config.loss.alpha) if config.loss.adaptive else None
        return cls(config, model, optimizer, controller)

    @property
    def rho(self) -> Optional[float]:
        if self.controller is not None:
            return self.controller.rho
        return fixed_rho(self.config)


def _diverged_log(state: TrainState, grad_norm: float = math.nan,
                  previous: Optional[PenaltyState] = None) -> StepLog:
    """Abort the step: drop gradients and any penalty update it made"""
    state.model.zero_grad()
    if previous is not None:
        state.controller.rollback(previous)
    return StepLog(step=state.step, loss=math.inf, rho=state.rho, grad_norm=grad_norm, diverged=True)


def train_step(state: TrainState, features: np.ndarray, labels: np.ndarray,
               rng: Optional[np.random.Generator] = None) -> StepLog:
    """One optimizer step on a batch.

    For adaptive PENEX the penalty controller sees the batch EX and SumExp
    means first, and the loss is then evaluated at the updated penalty. A
    non-finite loss or gradient leaves the parameters and the penalty estimate
    unchanged and returns a log flagged as diverged.
    """
    if labels.shape[0] == 0:
        raise ParameterError("empty batch")
    config = state.config
    state.step += 1
    state.model.zero_grad()
    logits = state.model.forward(features, rng)
    previous = state.controller.state if state.controller is not None else None

    try:
        if state.controller is not None:
            ex = ex_loss(logits, labels, config.loss.alpha)
            sumexp = sum_exp_mean(logits)
            if not (math.isfinite(ex.item()) and math.isfinite(sumexp.item())):
                return _diverged_log(state)
            rho = state.controller.observe(ex.item(), sumexp.item())
            loss = ex + sumexp * rho
        else:
            loss = compute_loss(config.loss, logits, labels, dual=state.dual)
    except DivergenceError as e:
        logger.debug("step %d diverged: %s", state.step, e)
        return _diverged_log(state, previous=previous)

    loss_value = loss.item()
    if not math.isfinite(loss_value):
        return _diverged_log(state, previous=previous)

    loss.backward()
    params = state.model.parameters()
    norm = clip_gradients(params, config.optim.grad_clip_value, config.optim.clip_mode)
    if not math.isfinite(norm):
        return _diverged_log(state, norm, previous)
    state.optimizer.step()

    if config.loss.kind == LossKind.CONEX_AUG_LAGRANGIAN:
        state.dual = al_dual_update(state.dual, float(config.loss.rho), config.loss.nu, mean_h_squared(logits.data))

    return StepLog(step=state.step, loss=loss_value, rho=state.rho, grad_norm=norm)


def evaluate_model(model: MLPClassifier, data: Dataset, config: TrainConfig) -> MetricsReport:
    return evaluate(model.predict_logits(data.features), data.labels, config.loss, config.ece_bins)


def _record_epoch(report: RunReport, state: TrainState, epoch: int, train_data: Dataset,
                  val_data: Optional[Dataset]) -> None:
    splits = [("train", train_data)] + ([("val", val_data)] if val_data is not None and val_data.n else [])
    for split_name, data in splits:
        metrics = evaluate_model(state.model, data, state.config)
        report.epochs.append(EpochRecord(epoch=epoch, split=split_name, metrics=metrics, rho=state.rho))


def _batches(order: np.ndarray, batch_size: int):
    for start in range(0, order.shape[0], batch_size):
        yield order[start: start + batch_size]


EpochCallback = Callable[[int, TrainState], None]


def train(config: TrainConfig, train_data: Dataset, val_data: Optional[Dataset] = None,
          name: str = "run", on_epoch_end: Optional[EpochCallback] = None) -> RunReport:
    """Run ``config.epochs`` epochs of shuffled mini-batches and evaluate after every epoch.

    Epoch 0 is the evaluation of the freshly initialized model. Identical
    configs and data give identical reports. ``on_epoch_end`` sees every
    checkpoint, epoch 0 included.
    """
    if config.batch_size > train_data.n:
        raise ParameterError(f"batch_size {config.batch_size} exceeds the {train_data.n} training rows")

    started = time.perf_counter()
    state = TrainState.create(config, train_data)
    shuffle_rng, dropout_rng = np.random.default_rng(config.seed).spawn(2)
    if config.model.dropout_p == 0:
        dropout_rng = None
    features = train_data.features.astype(config.precision)

    report = RunReport(name=name, config=config, classifier=state.model)
    logger.info("Training %s: loss=%s epochs=%d n=%d", name, config.loss.kind.value, config.epochs, train_data.n)
    _record_epoch(report, state, 0, train_data, val_data)
    if on_epoch_end is not None:
        on_epoch_end(0, state)

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(train_data.n)
        for batch in _batches(order, config.batch_size):
            log = train_step(state, features[batch], train_data.labels[batch], dropout_rng)
            if log.diverged and not report.diverged:
                report.diverged = True
                report.diverged_epoch = epoch
                logger.warning("%s diverged at epoch %d (step %d)", name, epoch, log.step)
            if log.diverged and config.halt_on_divergence:
                break

        _record_epoch(report, state, epoch, train_data, val_data)
        last = report.final("val") if val_data is not None and val_data.n else report.final("train")
        logger.info("%s epoch %d: acc=%.4f ece=%.4f ce=%.4f rho=%s",
                    name, epoch, last.acc, last.ece, last.ce, state.rho)
        if on_epoch_end is not None:
            on_epoch_end(epoch, state)
        if report.diverged and config.halt_on_divergence:
            break

    if state.controller is not None:
        report.rho_trajectory = list(state.controller.trajectory)
    histogram_data = val_data if val_data is not None and val_data.n else train_data
    margins = margin(state.model.predict_logits(histogram_data.features), histogram_data.labels)
    if np.all(np.isfinite(margins)):
        report.margin_histogram = margin_histogram(margins)
    report.wall_clock_seconds = time.perf_counter() - started
    logger.info("Finished %s in %.2fs", name, report.wall_clock_seconds)
    return report

