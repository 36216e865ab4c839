from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Spread of two unit-radius blobs giving a Bayes error of about 5%
BAYES_5PCT_SPREAD = 0.608


class LossKind(str, Enum):
    """Loss functions the trainer can optimize"""
    EX = "ex"
    PENEX = "penex"
    CE = "ce"
    LABEL_SMOOTHING = "label_smoothing"
    CONFIDENCE_PENALTY = "confidence_penalty"
    FOCAL = "focal"
    CONEX_SQ_PENALTY = "conex_sq_penalty"
    CONEX_AUG_LAGRANGIAN = "conex_aug_lagrangian"
    CONEX_HARD = "conex_hard"


CONEX_KINDS = (LossKind.CONEX_SQ_PENALTY, LossKind.CONEX_AUG_LAGRANGIAN, LossKind.CONEX_HARD)
# CONEX variants whose penalty weight must be a number
PENALIZED_CONEX_KINDS = (LossKind.CONEX_SQ_PENALTY, LossKind.CONEX_AUG_LAGRANGIAN)


class LossSpec(BaseModel):
    """Selects a loss and carries its hyperparameters; only the fields relevant to `kind` are read"""
    kind: LossKind = LossKind.PENEX
    alpha: float = Field(0.1, gt=0)                          # sensitivity of EX/PENEX/CONEX
    rho: Union[float, Literal["adaptive"]] = "adaptive"      # PENEX penalty, or CONEX penalty weight
    smooth_eps: float = Field(0.1, ge=0, le=1)               # label smoothing mass
    conf_lambda: float = Field(0.1, ge=0)                    # confidence penalty strength
    focal_gamma: float = Field(2.0, ge=0)                    # focal focusing parameter
    nu: float = Field(10.0, gt=0)                            # augmented Lagrangian inverse scaling
    verbatim_sq_penalty: bool = True                         # (rho/2)(E[h^2])^2 instead of (rho/2)E[h^2]

    @model_validator(mode="after")
    def _positive_rho(self) -> "LossSpec":
        if self.rho != "adaptive" and not self.rho > 0:
            raise ValueError("rho must be positive or 'adaptive'")
        return self

    @property
    def adaptive(self) -> bool:
        return self.kind == LossKind.PENEX and self.rho == "adaptive"


class ModelSpec(BaseModel):
    """Shape of an MLP classifier; empty hidden_dims gives a linear model"""
    input_dim: Optional[int] = Field(None, gt=0)      # resolved from the data when omitted
    hidden_dims: List[int] = Field(default_factory=lambda: [32])
    num_classes: Optional[int] = Field(None, ge=2)    # resolved from the data when omitted
    activation: Literal["relu"] = "relu"
    dropout_p: float = Field(0.0, ge=0, lt=1)
    conex_hard: bool = False                          # emit K-1 logits plus their negative sum

    @model_validator(mode="after")
    def _positive_widths(self) -> "ModelSpec":
        if any(width <= 0 for width in self.hidden_dims):
            raise ValueError("hidden_dims must be positive")
        return self


class OptimKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"
    ADAMW = "adamw"


class OptimSpec(BaseModel):
    """Optimizer choice plus gradient clipping"""
    kind: OptimKind = OptimKind.ADAM
    learning_rate: float = Field(1e-4, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    grad_clip_value: Optional[float] = Field(None, gt=0)
    clip_mode: Literal["value", "norm"] = "value"
    weight_decay: float = Field(0.0, ge=0)


class PenaltySettings(BaseModel):
    """Fixed parameters of the adaptive penalty controller"""
    beta: float = Field(0.1, gt=0, le=1)      # EMA factor
    rho_min: float = Field(1e-6, gt=0)
    rho_max: float = Field(100.0, gt=0)
    eps_guard: float = Field(1e-12, ge=0)
    clip_before_ema: bool = False             # clamp the batch estimate instead of the EMA output

    @model_validator(mode="after")
    def _ordered_bounds(self) -> "PenaltySettings":
        if not self.rho_min < self.rho_max:
            raise ValueError("rho_min must be smaller than rho_max")
        return self


class TrainConfig(BaseModel):
    """Everything one training run needs besides the data"""
    loss: LossSpec = Field(default_factory=LossSpec)
    model: ModelSpec = Field(default_factory=ModelSpec)
    optim: OptimSpec = Field(default_factory=OptimSpec)
    epochs: int = Field(200, ge=0)
    batch_size: int = Field(64, gt=0)
    seed: int = 0
    penalty: PenaltySettings = Field(default_factory=PenaltySettings)
    halt_on_divergence: bool = True
    precision: Literal["float64", "float32"] = "float64"
    ece_bins: int = Field(15, ge=1)


class DatasetKind(str, Enum):
    BLOBS = "blobs"
    RINGS = "rings"
    CATEGORICAL_SINGLE_X = "categorical_single_x"
    CSV = "csv"


class DatasetSpec(BaseModel):
    """How to obtain the data of an experiment"""
    kind: DatasetKind = DatasetKind.BLOBS
    n: int = Field(400, gt=0)
    num_classes: int = Field(2, ge=1)
    dim: int = Field(2, ge=2)
    spread: float = Field(BAYES_5PCT_SPREAD, ge=0)
    probs: Optional[List[float]] = None       # categorical_single_x only
    path: Optional[str] = None                # csv only
    standardize: bool = False                 # csv only
    seed: int = 0

    @model_validator(mode="after")
    def _required_inputs(self) -> "DatasetSpec":
        if self.kind == DatasetKind.CSV and not self.path:
            raise ValueError("csv datasets need a path")
        if self.kind == DatasetKind.CATEGORICAL_SINGLE_X and not self.probs:
            raise ValueError("categorical_single_x datasets need probs")
        return self


class ExperimentConfig(BaseModel):
    """One experiment file: data, training setup and what to run"""
    name: str = "experiment"
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    noise_fraction: float = Field(0.0, ge=0, le=1)
    split_ratio: float = Field(0.8, gt=0, lt=1)
    train: TrainConfig = Field(default_factory=TrainConfig)
    sweep: Optional[List[float]] = None
    ablations: Optional[List[LossKind]] = None
    boost_rounds: int = Field(50, gt=0)
    conex_rho: float = Field(1.0, gt=0)       # penalty weight of the CONEX ablations
    output_dir: str = "./runs"

    @model_validator(mode="after")
    def _conex_penalty_weight(self) -> "ExperimentConfig":
        loss = self.train.loss
        if loss.kind in PENALIZED_CONEX_KINDS and loss.rho == "adaptive":
            self.train = self.train.model_copy(update={"loss": loss.model_copy(update={"rho": self.conex_rho})})
        return self


class MetricsReport(BaseModel):
    """Evaluation metrics of one split, all stored with their natural sign"""
    acc: float
    ece: float
    ce: float
    brier: float
    mean_margin: float
    margin_quantiles: Dict[str, float]
    n: int
    ce_saturated: bool = False
    mean_abs_logit: float = 0.0
    max_abs_logit_sum: float = 0.0


class EpochRecord(BaseModel):
    epoch: int
    split: Literal["train", "val"]
    metrics: MetricsReport
    rho: Optional[float] = None


class StepLog(BaseModel):
    step: int
    loss: float
    rho: Optional[float] = None
    grad_norm: float
    diverged: bool = False


class MarginHistogram(BaseModel):
    edges: List[float]
    counts: List[int]


class RunReport(BaseModel):
    """Full record of a training run"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = "run"
    config: TrainConfig
    epochs: List[EpochRecord] = Field(default_factory=list)
    rho_trajectory: List[float] = Field(default_factory=list)
    diverged: bool = False
    diverged_epoch: Optional[int] = None
    wall_clock_seconds: float = 0.0
    margin_histogram: Optional[MarginHistogram] = None
    classifier: Optional[Any] = Field(default=None, exclude=True)   # trained model, not serialized

    def final(self, split: str = "val") -> Optional[MetricsReport]:
        """Metrics of the last recorded epoch for a split"""
        records = [r for r in self.epochs if r.split == split]
        return records[-1].metrics if records else None

    @property
    def epochs_run(self) -> int:
        return max((r.epoch for r in self.epochs), default=0)


class BoundCheck(BaseModel):
    """Empirical small-margin frequencies against the PENEX margin bound"""
    gamma_grid: List[float]
    empirical_freq: List[float]
    bound_rhs: List[float]
    slack: List[float]              # binomial 99% half-widths
    penex_value: float
    alpha: float
    rho: float
    holds: List[bool]
    n: int

    @property
    def all_hold(self) -> bool:
        return all(self.holds)


class DirectionCheck(BaseModel):
    eta: float
    cosine: Optional[float] = None
    rho_fit: Optional[float] = None
    status: Literal["ok", "inconclusive"] = "ok"
    detail: str = ""


class WeakLearnerReport(BaseModel):
    """Cosine between the incremental EX minimizer and -grad PENEX, per step size"""
    checks: List[DirectionCheck]
    seed: int

    @property
    def conclusive(self) -> bool:
        return all(c.status == "ok" for c in self.checks)

    @property
    def cosines(self) -> List[Optional[float]]:
        return [c.cosine for c in self.checks]


class CheckResult(BaseModel):
    name: str
    passed: bool
    hard: bool = True
    inconclusive: bool = False
    detail: str = ""


class VerificationReport(BaseModel):
    checks: List[CheckResult]
    passed: bool
    seed: int


class MarginComparison(BaseModel):
    """Seed-averaged mean held-out margins of PENEX- and CE-trained MLPs"""
    seeds: int
    alpha: float
    penex_geometric: float          # input-space distance to the decision boundary
    ce_geometric: float
    penex_logit: float              # true logit minus the strongest rival
    ce_logit: float
    penex_exceeds_ce: bool          # judged on the geometric margins


class RunSummary(BaseModel):
    """Compact view of a finished run, kept by the registry and returned by the API"""
    run_id: str = ""
    name: str
    kind: str
    diverged: bool = False
    diverged_epoch: Optional[int] = None
    final_train_acc: Optional[float] = None
    final_val_acc: Optional[float] = None
    final_rho: Optional[float] = None
    output_dir: Optional[str] = None
