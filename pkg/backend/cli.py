"""Command-line front end: penex {train,eval,sweep,ablate,compare,boost,margins,verify}"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from config import Config, config
from errors import PenexError
from experiments import ExperimentRunner, apply_environment, load_experiment, with_loss, with_train
from models import ExperimentConfig, LossKind

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY_FAILED = 2      # failed oracle suite or margin comparison


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _loss_kind(value: str) -> LossKind:
    try:
        return LossKind(value.lower())
    except ValueError:
        choices = ", ".join(kind.value for kind in LossKind)
        raise argparse.ArgumentTypeError(f"unknown loss '{value}' (choose from {choices})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="penex", description="PENEX training, ablation and verification workbench")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def experiment_command(name: str, help_text: str, single_alpha: bool = True) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", help="TOML or JSON experiment file (a summary.json also works)")
        sub.add_argument("--seed", type=int, help="training seed")
        sub.add_argument("--out", help="output directory")
        sub.add_argument("--loss", type=_loss_kind, help="loss kind, e.g. penex or ce")
        sub.add_argument("--epochs", type=int, help="number of training epochs")
        if single_alpha:
            sub.add_argument("--alpha", type=float, help="loss sensitivity")
        return sub

    experiment_command("train", "train one model and write metrics.csv, summary.json, margins.csv")
    experiment_command("sweep", "one run per alpha plus a merged sweep.csv", single_alpha=False).add_argument(
        "--alpha", type=float, nargs="+", help="alpha values, defaults to the config sweep or the standard grid")
    experiment_command("ablate", "PENEX against CONEX variants and raw EX")
    experiment_command("compare", "baseline losses side by side in comparison.csv")
    experiment_command("boost", "SAMME with decision stumps").add_argument(
        "--rounds", type=int, help="boosting rounds")

    eval_cmd = experiment_command("eval", "evaluate a saved model")
    eval_cmd.add_argument("--model-dir", required=True, help="directory written by train")

    margins = commands.add_parser("margins", help="seed-averaged mean geometric margin of PENEX against CE")
    margins.add_argument("--seeds", type=int, default=5)
    margins.add_argument("--epochs", type=int, default=200)
    margins.add_argument("--alpha", type=float, default=0.1)

    verify = commands.add_parser("verify", help="run the oracle suite")
    verify.add_argument("--seed", type=int, help="oracle seed")
    verify.add_argument("--out", help="directory for verification.json")
    verify.add_argument("--directions", type=int, help="random directions per step size")
    return parser


def resolve_experiment(args: argparse.Namespace, settings: Config) -> ExperimentConfig:
    """Config file (or defaults), then environment overrides, then command-line flags"""
    if args.config:
        experiment = load_experiment(args.config, settings)
    else:
        experiment = apply_environment(ExperimentConfig(output_dir=settings.DEFAULT_OUTPUT_DIR), settings)

    if args.out:
        experiment = experiment.model_copy(update={"output_dir": args.out})
    if args.seed is not None:
        experiment = with_train(experiment, seed=args.seed)
    if args.epochs is not None:
        experiment = with_train(experiment, epochs=args.epochs)
    if args.loss is not None:
        experiment = with_loss(experiment, kind=args.loss)
    if isinstance(args.alpha, float):
        experiment = with_loss(experiment, alpha=args.alpha)
    # model_copy skips validation
    return ExperimentConfig.model_validate(experiment.model_dump())


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2))


def run_command(args: argparse.Namespace, runner: ExperimentRunner) -> int:
    if args.command == "verify":
        report = runner.verify(seed=args.seed, directions=args.directions, output_dir=args.out)
        print(report.model_dump_json(indent=2))
        return EXIT_OK if report.passed else EXIT_VERIFY_FAILED

    if args.command == "margins":
        comparison = runner.margin_comparison(seeds=args.seeds, epochs=args.epochs, alpha=args.alpha)
        print(comparison.model_dump_json(indent=2))
        return EXIT_OK if comparison.penex_exceeds_ce else EXIT_VERIFY_FAILED

    experiment = resolve_experiment(args, runner.config)
    if args.command == "train":
        _, summary = runner.run_train(experiment)
        print(summary.model_dump_json(indent=2))
    elif args.command == "eval":
        # The dataset only comes from --config; otherwise the saved run's own data is used
        metrics = runner.evaluate_saved(args.model_dir, experiment if args.config else None)
        print(metrics.model_dump_json(indent=2))
    elif args.command == "sweep":
        reports = runner.sweep_alpha(experiment, args.alpha)
        logger.info("%d of %d sweep runs finished", sum(r is not None for r in reports), len(reports))
    elif args.command == "ablate":
        results = runner.ablate(experiment)
        _print_json({kind.value: (r.diverged_epoch if r is not None and r.diverged else None)
                     for kind, r in results.items()})
    elif args.command == "compare":
        _print_json(runner.compare(experiment))
    elif args.command == "boost":
        ensemble = runner.boost(experiment, args.rounds)
        _print_json({"rounds": len(ensemble.rounds), "stopped_early": ensemble.stopped_early})
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=config.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    runner = ExperimentRunner(config)
    try:
        return run_command(args, runner)
    except (PenexError, OSError, ValueError) as e:
        logger.error("%s failed: %s", args.command, e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
