"""Experiment orchestration: training runs, sweeps, ablations, comparisons, boosting and verification"""

import csv
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from boosting import Ensemble, ensemble_margins, ensemble_predict, samme_train
from config import Config
from datasets import Dataset, flip_labels, make_dataset, split
from errors import ContractError, ParameterError
from losses import predictive_probs
from metrics import accuracy, bootstrap, brier, ece, eval_ce, evaluate, margin_histogram
from models import (
    CONEX_KINDS,
    PENALIZED_CONEX_KINDS,
    DatasetSpec,
    ExperimentConfig,
    LossKind,
    LossSpec,
    MarginComparison,
    MetricsReport,
    OptimSpec,
    RunReport,
    RunSummary,
    TrainConfig,
    VerificationReport,
)
from networks import geometric_margins, load_model
from run_registry import RunRegistry
from trainer import resolve_model_spec, train
from verification import run_oracle_suite

logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = [1e-5, 0.2, 0.4, 0.8, 1.6, 3.2]
ABLATION_KINDS = [
    LossKind.PENEX,
    LossKind.CONEX_SQ_PENALTY,
    LossKind.CONEX_AUG_LAGRANGIAN,
    LossKind.CONEX_HARD,
    LossKind.EX,
]
COMPARISON_KINDS = [
    LossKind.CE,
    LossKind.LABEL_SMOOTHING,
    LossKind.CONFIDENCE_PENALTY,
    LossKind.FOCAL,
    LossKind.PENEX,
]
ZERO_SUM_TOLERANCE = 1e-8
METRIC_COLUMNS = ["epoch", "split", "acc", "ece", "ce", "brier", "mean_margin", "rho"]

PathLike = Union[str, Path]


def load_experiment(path: PathLike, settings: Config) -> ExperimentConfig:
    """Parse a TOML or JSON experiment file; a summary.json is read through its config echo"""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ParameterError(f"{path}: {e}") from e
    if isinstance(data.get("config"), dict) and "train" in data["config"]:
        data = data["config"]
    try:
        experiment = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ParameterError(f"{path}: {e}") from e
    return apply_environment(experiment, settings)


def apply_environment(experiment: ExperimentConfig, settings: Config) -> ExperimentConfig:
    """Apply the output directory and seed overrides taken from the environment"""
    if settings.OUTPUT_DIR:
        experiment = experiment.model_copy(update={"output_dir": settings.OUTPUT_DIR})
    if settings.SEED is not None:
        experiment = with_train(experiment, seed=settings.SEED)
    return experiment


def with_train(experiment: ExperimentConfig, **updates) -> ExperimentConfig:
    return experiment.model_copy(update={"train": experiment.train.model_copy(update=updates)})


def with_loss(experiment: ExperimentConfig, **updates) -> ExperimentConfig:
    """Replace loss fields; a penalized CONEX loss left at an adaptive rho takes the experiment's conex_rho"""
    loss = experiment.train.loss.model_copy(update=updates)
    if loss.kind in PENALIZED_CONEX_KINDS and loss.rho == "adaptive":
        loss = loss.model_copy(update={"rho": experiment.conex_rho})
    return with_train(experiment, loss=loss)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def metric_rows(report: RunReport) -> List[list]:
    rows = []
    for record in report.epochs:
        m = record.metrics
        rows.append([record.epoch, record.split, m.acc, m.ece, m.ce, m.brier, m.mean_margin, record.rho])
    return rows


def summarize(report: RunReport, output_dir: Optional[PathLike] = None) -> RunSummary:
    train_metrics, val_metrics = report.final("train"), report.final("val")
    return RunSummary(
        name=report.name,
        kind=report.config.loss.kind.value,
        diverged=report.diverged,
        diverged_epoch=report.diverged_epoch,
        final_train_acc=train_metrics.acc if train_metrics else None,
        final_val_acc=val_metrics.acc if val_metrics else None,
        final_rho=report.epochs[-1].rho if report.epochs else None,
        output_dir=str(output_dir) if output_dir is not None else None,
    )


class ExperimentRunner:
    """Runs experiments, writes their reports and remembers recent runs"""

    def __init__(self, config: Config):
        self.config = config
        self.registry = RunRegistry(config.MAX_RUN_HISTORY)

    def prepare_data(self, experiment: ExperimentConfig) -> Tuple[Dataset, Dataset]:
        """Build, split and (optionally) corrupt the training data; validation labels stay clean"""
        dataset = make_dataset(experiment.dataset)
        train_data, val_data = split(dataset, experiment.split_ratio, experiment.dataset.seed)
        if experiment.noise_fraction > 0:
            train_data = flip_labels(train_data, experiment.noise_fraction, experiment.train.seed)
        return train_data, val_data

    def write_run(self, report: RunReport, experiment: ExperimentConfig, output_dir: Path) -> None:
        """Write metrics.csv, summary.json, margins.csv and model.npz"""
        output_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(output_dir / "metrics.csv", METRIC_COLUMNS, metric_rows(report))

        summary = {
            "name": report.name,
            "config": experiment.model_dump(mode="json"),
            "diverged": report.diverged,
            "diverged_epoch": report.diverged_epoch,
            "epochs_run": report.epochs_run,
            "final_train": report.final("train").model_dump() if report.final("train") else None,
            "final_val": report.final("val").model_dump() if report.final("val") else None,
            "rho_trajectory_length": len(report.rho_trajectory),
            "wall_clock_seconds": report.wall_clock_seconds,
        }
        (output_dir / "summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")

        if report.margin_histogram is not None:
            self._write_histogram(output_dir / "margins.csv", report.margin_histogram.edges,
                                  report.margin_histogram.counts)
        if report.classifier is not None:
            report.classifier.save(output_dir / "model.npz")
        logger.info("Wrote run %s to %s", report.name, output_dir)

    @staticmethod
    def _write_histogram(path: Path, edges: Sequence[float], counts: Sequence[int]) -> None:
        rows = [[float(edges[i]), float(edges[i + 1]), int(counts[i])] for i in range(len(counts))]
        _write_csv(path, ["bin_left", "bin_right", "count"], rows)

    def run_train(self, experiment: ExperimentConfig,
                  output_dir: Optional[PathLike] = None) -> Tuple[RunReport, RunSummary]:
        """
        Train one model and write its report files.

        Args:
            experiment: Experiment to run
            output_dir: Directory for the report files, defaults to the experiment's output_dir

        Returns:
            Tuple of (full run report, registered summary)
        """
        output_dir = Path(output_dir or experiment.output_dir)
        train_data, val_data = self.prepare_data(experiment)
        report = train(experiment.train, train_data, val_data, name=experiment.name)
        self.write_run(report, experiment, output_dir)
        summary = self.registry.register(summarize(report, output_dir))
        return report, summary

    def _run_parallel(self, tasks: List[Tuple[str, Callable[[], RunReport]]]) -> List[Optional[RunReport]]:
        """Run independent tasks on the worker pool; a failing task is logged and yields None"""
        results: List[Optional[RunReport]] = []
        with ThreadPoolExecutor(max_workers=self.config.MAX_WORKERS) as pool:
            futures = [(label, pool.submit(task)) for label, task in tasks]
            for label, future in futures:
                try:
                    results.append(future.result())
                except Exception as e:
                    logger.error("Run %s failed: %s", label, e)
                    results.append(None)
        return results

    def sweep_alpha(self, experiment: ExperimentConfig,
                    alphas: Optional[Sequence[float]] = None) -> List[Optional[RunReport]]:
        """One run per alpha with seeds offset by position, plus a merged sweep.csv"""
        alphas = list(alphas or experiment.sweep or DEFAULT_ALPHAS)
        if any(alpha <= 0 for alpha in alphas):
            raise ParameterError("sweep values of alpha must be positive")
        root = Path(experiment.output_dir)

        def task(index: int, alpha: float) -> Callable[[], RunReport]:
            sub = with_loss(experiment, alpha=alpha)
            sub = with_train(sub, seed=experiment.train.seed + index)
            sub = sub.model_copy(update={
                "name": f"{experiment.name}_alpha_{alpha:g}",
                "output_dir": str(root / f"alpha_{alpha:g}"),
            })
            return lambda: self.run_train(sub)[0]

        reports = self._run_parallel([(f"alpha={a:g}", task(i, a)) for i, a in enumerate(alphas)])
        root.mkdir(parents=True, exist_ok=True)
        rows = [
            [alpha] + row
            for alpha, report in zip(alphas, reports) if report is not None
            for row in metric_rows(report)
        ]
        _write_csv(root / "sweep.csv", ["alpha"] + METRIC_COLUMNS, rows)
        logger.info("Sweep over %d values of alpha finished", len(alphas))
        return reports

    def ablation_experiment(self, experiment: ExperimentConfig, kind: LossKind, num_classes: int) -> ExperimentConfig:
        """The experiment with its loss replaced; CONEX variants run at alpha = 1/(K-1)"""
        updates = {"kind": kind}
        if kind in CONEX_KINDS:
            updates["alpha"] = 1.0 / (num_classes - 1)
        if kind in PENALIZED_CONEX_KINDS:
            updates["rho"] = experiment.conex_rho
        sub = with_loss(experiment, **updates)
        return sub.model_copy(update={
            "name": f"{experiment.name}_{kind.value}",
            "output_dir": str(Path(experiment.output_dir) / kind.value),
        })

    def ablate(self, experiment: ExperimentConfig) -> Dict[LossKind, Optional[RunReport]]:
        """Same data, model, optimizer and seed under PENEX, the CONEX variants and raw EX"""
        kinds = list(experiment.ablations or ABLATION_KINDS)
        train_data, _ = self.prepare_data(experiment)
        subs = [self.ablation_experiment(experiment, kind, train_data.num_classes) for kind in kinds]
        reports = self._run_parallel([(sub.name, lambda sub=sub: self.run_train(sub)[0]) for sub in subs])
        results = dict(zip(kinds, reports))

        rows = []
        for kind, sub, report in zip(kinds, subs, reports):
            if report is None:
                continue
            final = report.final("val") or report.final("train")
            rows.append([kind.value, sub.train.loss.alpha, report.diverged, report.diverged_epoch,
                         report.epochs_run, final.acc, final.mean_abs_logit, final.max_abs_logit_sum])
        root = Path(experiment.output_dir)
        root.mkdir(parents=True, exist_ok=True)
        _write_csv(root / "ablation.csv",
                   ["loss", "alpha", "diverged", "diverged_epoch", "epochs_run", "final_val_acc",
                    "mean_abs_logit", "max_abs_logit_sum"], rows)

        hard = results.get(LossKind.CONEX_HARD)
        if hard is not None:
            worst = max((record.metrics.max_abs_logit_sum / max(1.0, record.metrics.mean_abs_logit)
                         for record in hard.epochs if np.isfinite(record.metrics.mean_abs_logit)), default=0.0)
            if worst > ZERO_SUM_TOLERANCE:
                raise ContractError(f"hard-constrained logits left the zero-sum surface: |sum f| = {worst:.3e}")

        penex, conex = results.get(LossKind.PENEX), results.get(LossKind.CONEX_SQ_PENALTY)
        if penex is not None and conex is not None and penex.final("val") and conex.final("val"):
            if penex.final("val").acc < conex.final("val").acc:
                logger.warning("PENEX val acc %.4f below squared-penalty CONEX %.4f",
                               penex.final("val").acc, conex.final("val").acc)
        return results

    def compare(self, experiment: ExperimentConfig, kinds: Optional[Sequence[LossKind]] = None,
                n_boot: int = 100) -> List[dict]:
        """Train baseline losses under one setup and tabulate validation metrics, larger is better"""
        kinds = list(kinds or COMPARISON_KINDS)
        train_data, val_data = self.prepare_data(experiment)
        evaluation = val_data if val_data.n else train_data
        subs = [self.ablation_experiment(experiment, kind, train_data.num_classes) for kind in kinds]
        reports = self._run_parallel([(sub.name, lambda sub=sub: self.run_train(sub)[0]) for sub in subs])

        bins = experiment.train.ece_bins
        scorers = {
            "acc": (1.0, accuracy),
            "ece": (-1.0, lambda p, y: ece(p, y, bins)),
            "ce": (-1.0, eval_ce),
            "brier": (-1.0, brier),
        }
        table = []
        for kind, sub, report in zip(kinds, subs, reports):
            if report is None:
                continue
            probs = predictive_probs(report.classifier.predict_logits(evaluation.features), sub.train.loss)
            row = {"loss": kind.value}
            for name, (sign, metric) in scorers.items():
                column = name if sign > 0 else f"neg_{name}"
                row[column] = sign * metric(probs, evaluation.labels)
                row[f"{name}_std"] = bootstrap(probs, evaluation.labels, metric, n_boot, experiment.train.seed)[1]
            table.append(row)

        root = Path(experiment.output_dir)
        root.mkdir(parents=True, exist_ok=True)
        header = ["loss", "acc", "acc_std", "neg_ece", "ece_std", "neg_ce", "ce_std", "neg_brier", "brier_std"]
        _write_csv(root / "comparison.csv", header, [[row[column] for column in header] for row in table])
        return table

    def boost(self, experiment: ExperimentConfig, rounds: Optional[int] = None,
              output_dir: Optional[PathLike] = None) -> Ensemble:
        """SAMME on the experiment's training split; writes rounds.csv and margins.csv"""
        output_dir = Path(output_dir or experiment.output_dir)
        train_data, val_data = self.prepare_data(experiment)
        ensemble = samme_train(train_data, rounds or experiment.boost_rounds, seed=experiment.train.seed)

        output_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(output_dir / "rounds.csv", ["round", "epsilon", "eta", "train_acc", "mean_margin"],
                   [[r.round, r.epsilon, r.eta, r.train_acc, r.mean_margin] for r in ensemble.rounds])
        evaluation = val_data if val_data.n else train_data
        histogram = margin_histogram(ensemble_margins(ensemble, evaluation.features, evaluation.labels))
        self._write_histogram(output_dir / "margins.csv", histogram.edges, histogram.counts)

        val_acc = float(np.mean(ensemble_predict(ensemble, val_data.features) == val_data.labels)) \
            if val_data.n else None
        self.registry.register(RunSummary(
            name=f"{experiment.name}_samme",
            kind="samme",
            final_train_acc=ensemble.rounds[-1].train_acc if ensemble.rounds else None,
            final_val_acc=val_acc,
            output_dir=str(output_dir),
        ))
        logger.info("Boosting finished after %d rounds", len(ensemble.rounds))
        return ensemble

    def verify(self, seed: Optional[int] = None, directions: Optional[int] = None,
               output_dir: Optional[PathLike] = None) -> VerificationReport:
        report = run_oracle_suite(
            seed=self.config.VERIFY_SEED if seed is None else seed,
            directions=directions or self.config.WEAK_LEARNER_DIRECTIONS,
        )
        if output_dir is not None:
            path = Path(output_dir)
            path.mkdir(parents=True, exist_ok=True)
            (path / "verification.json").write_text(report.model_dump_json(indent=2), encoding="utf-8")
        return report

    def evaluate_saved(self, model_dir: PathLike, experiment: Optional[ExperimentConfig] = None) -> MetricsReport:
        """Reload model.npz with its echoed config and evaluate it on a dataset.

        The dataset comes from ``experiment`` when given, otherwise from the echo;
        its validation split is used when non-empty.
        """
        model_dir = Path(model_dir)
        echo = load_experiment(model_dir / "summary.json", Config(OUTPUT_DIR=None, SEED=None))
        train_data, val_data = self.prepare_data(experiment or echo)
        data = val_data if val_data.n else train_data
        model = load_model(model_dir / "model.npz", resolve_model_spec(echo.train, data))
        return evaluate(model.predict_logits(data.features), data.labels, echo.train.loss, echo.train.ece_bins)

    def margin_comparison(self, seeds: int = 5, n: int = 200, epochs: int = 200,
                          alpha: float = 0.1) -> MarginComparison:
        """Seed-averaged mean validation margins of PENEX- and CE-trained MLPs on blobs.

        Logits of the two losses live on different scales, so the comparison is
        made on geometric margins: the input-space distance of each held-out
        point to the decision boundary, signed by correctness.
        """
        geometric = {LossKind.PENEX: 0.0, LossKind.CE: 0.0}
        logit = {LossKind.PENEX: 0.0, LossKind.CE: 0.0}
        for seed in range(seeds):
            for kind in (LossKind.PENEX, LossKind.CE):
                experiment = ExperimentConfig(
                    name=f"margin_{kind.value}_{seed}",
                    dataset=DatasetSpec(n=n, seed=seed),
                    train=TrainConfig(
                        loss=LossSpec(kind=kind, alpha=alpha),
                        optim=OptimSpec(learning_rate=1e-2),
                        epochs=epochs,
                        batch_size=32,
                        seed=seed,
                    ),
                )
                train_data, val_data = self.prepare_data(experiment)
                report = train(experiment.train, train_data, val_data, name=experiment.name)
                distances = geometric_margins(report.classifier, val_data.features, val_data.labels)
                geometric[kind] += float(np.mean(distances)) / seeds
                logit[kind] += report.final("val").mean_margin / seeds

        result = MarginComparison(
            seeds=seeds,
            alpha=alpha,
            penex_geometric=geometric[LossKind.PENEX],
            ce_geometric=geometric[LossKind.CE],
            penex_logit=logit[LossKind.PENEX],
            ce_logit=logit[LossKind.CE],
            penex_exceeds_ce=geometric[LossKind.PENEX] > geometric[LossKind.CE],
        )
        if result.penex_exceeds_ce:
            logger.info("Mean geometric margin: PENEX %.4f, CE %.4f", result.penex_geometric, result.ce_geometric)
        else:
            logger.error("Mean geometric PENEX margin %.4f does not exceed CE margin %.4f",
                         result.penex_geometric, result.ce_geometric)
        return result
