"""Tests for the command-line front end."""

import json
from pathlib import Path

import pytest

import cli
from models import CheckResult, LossKind, MarginComparison, VerificationReport

SMALL_TOML = """\
name = "cli_run"

[dataset]
n = 60
seed = 1

[train]
epochs = 1
batch_size = 16

[train.model]
hidden_dims = [8]

[train.optim]
learning_rate = 0.01
"""


@pytest.fixture(autouse=True)
def quiet_settings(settings, monkeypatch):
    monkeypatch.setattr(cli, "config", settings)
    return settings


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_TOML, encoding="utf-8")
    return path


def _report(passed: bool) -> VerificationReport:
    return VerificationReport(checks=[CheckResult(name="samme_eta", passed=passed)], passed=passed, seed=0)


class TestParser:

    def test_command_required(self):
        with pytest.raises(SystemExit) as info:
            cli.build_parser().parse_args([])
        assert info.value.code == 1

    def test_unknown_loss(self):
        with pytest.raises(SystemExit) as info:
            cli.build_parser().parse_args(["train", "--loss", "hinge"])
        assert info.value.code == 1

    def test_loss_is_case_insensitive(self):
        assert cli.build_parser().parse_args(["train", "--loss", "PENEX"]).loss == LossKind.PENEX

    def test_sweep_takes_several_alphas(self):
        assert cli.build_parser().parse_args(["sweep", "--alpha", "0.1", "0.2"]).alpha == [0.1, 0.2]

    def test_eval_needs_model_dir(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["eval"])


class TestResolveExperiment:

    def test_flags_override_file(self, config_file, settings, tmp_path):
        args = cli.build_parser().parse_args([
            "train", "--config", str(config_file), "--seed", "5", "--epochs", "3",
            "--loss", "ce", "--alpha", "0.3", "--out", str(tmp_path / "x"),
        ])
        experiment = cli.resolve_experiment(args, settings)
        assert experiment.name == "cli_run"
        assert experiment.train.seed == 5
        assert experiment.train.epochs == 3
        assert experiment.train.loss.kind == LossKind.CE
        assert experiment.train.loss.alpha == 0.3
        assert experiment.output_dir == str(tmp_path / "x")

    def test_defaults_without_file(self, settings):
        experiment = cli.resolve_experiment(cli.build_parser().parse_args(["train"]), settings)
        assert experiment.output_dir == settings.DEFAULT_OUTPUT_DIR

    def test_invalid_flag_value_rejected(self, settings):
        args = cli.build_parser().parse_args(["train", "--epochs", "-2"])
        with pytest.raises(ValueError):
            cli.resolve_experiment(args, settings)


class TestMain:

    def test_train_then_eval(self, config_file, tmp_path, capsys):
        out = tmp_path / "run"
        assert cli.main(["train", "--config", str(config_file), "--out", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["name"] == "cli_run"
        assert (out / "metrics.csv").exists()

        assert cli.main(["eval", "--model-dir", str(out)]) == 0
        metrics = json.loads(capsys.readouterr().out)
        assert metrics["acc"] == summary["final_val_acc"]

    def test_boost(self, config_file, tmp_path, capsys):
        assert cli.main(["boost", "--config", str(config_file), "--out", str(tmp_path), "--rounds", "3"]) == 0
        assert json.loads(capsys.readouterr().out)["rounds"] <= 3
        assert (tmp_path / "rounds.csv").exists()

    @pytest.mark.parametrize("kind", ["conex_sq_penalty", "conex_aug_lagrangian"])
    def test_penalized_conex_losses_train(self, config_file, tmp_path, capsys, kind):
        out = tmp_path / kind
        assert cli.main(["train", "--config", str(config_file), "--loss", kind, "--out", str(out)]) == 0
        assert json.loads(capsys.readouterr().out)["kind"] == kind
        echo = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert echo["config"]["train"]["loss"]["rho"] == echo["config"]["conex_rho"]

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["train", "--config", str(tmp_path / "absent.toml")]) == 1

    def test_invalid_experiment(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[train]\nbatch_size = 0\n", encoding="utf-8")
        assert cli.main(["train", "--config", str(path)]) == 1

    def test_verify_pass(self, monkeypatch, tmp_path):
        monkeypatch.setattr("experiments.run_oracle_suite", lambda **kwargs: _report(True))
        assert cli.main(["verify", "--out", str(tmp_path)]) == 0
        assert Path(tmp_path / "verification.json").exists()

    @pytest.mark.parametrize("exceeds, code", [(True, 0), (False, 2)])
    def test_margins_exit_code(self, monkeypatch, capsys, exceeds, code):
        comparison = MarginComparison(seeds=1, alpha=0.1, penex_geometric=0.8, ce_geometric=0.6,
                                      penex_logit=2.0, ce_logit=3.0, penex_exceeds_ce=exceeds)
        monkeypatch.setattr(cli.ExperimentRunner, "margin_comparison", lambda self, **kwargs: comparison)
        assert cli.main(["margins", "--seeds", "1"]) == code
        assert json.loads(capsys.readouterr().out)["penex_geometric"] == 0.8

    def test_verify_failure_exit_code(self, monkeypatch):
        monkeypatch.setattr("experiments.run_oracle_suite", lambda **kwargs: _report(False))
        assert cli.main(["verify"]) == 2
