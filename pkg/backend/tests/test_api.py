"""Tests for FastAPI API endpoints.

Covers /api/train, /api/verify and /api/runs. Uses the test_app and client
fixtures from conftest.py, which provide a FastAPI app wired to a
mock_runner so no model is actually trained.
"""

from config import Config
from models import CheckResult, VerificationReport


class TestTrainEndpoint:
    """POST /api/train: request/response handling."""

    def test_returns_200_and_summary(self, client, mock_runner):
        resp = client.post("/api/train", json={"name": "small", "train": {"epochs": 2}})

        assert resp.status_code == 200
        body = resp.json()
        assert body["run_id"] == "run_1"
        assert body["kind"] == "penex"
        assert body["final_rho"] == 0.05

    def test_forwards_parsed_experiment(self, client, mock_runner):
        client.post("/api/train", json={"name": "forwarded", "train": {"epochs": 3, "loss": {"kind": "ce"}}})

        experiment = mock_runner.run_train.call_args.args[0]
        assert experiment.name == "forwarded"
        assert experiment.train.epochs == 3
        assert experiment.train.loss.kind.value == "ce"

    def test_environment_overrides_apply(self, client, mock_runner):
        mock_runner.config = Config(OUTPUT_DIR="/tmp/override", SEED=9)

        client.post("/api/train", json={"name": "env"})

        experiment = mock_runner.run_train.call_args.args[0]
        assert experiment.output_dir == "/tmp/override"
        assert experiment.train.seed == 9

    def test_empty_body_uses_defaults(self, client, mock_runner):
        resp = client.post("/api/train", json={})

        assert resp.status_code == 200
        assert mock_runner.run_train.call_args.args[0].name == "experiment"

    def test_invalid_experiment_returns_422(self, client, mock_runner):
        resp = client.post("/api/train", json={"train": {"epochs": -1}})

        assert resp.status_code == 422
        mock_runner.run_train.assert_not_called()

    def test_unknown_loss_returns_422(self, client):
        resp = client.post("/api/train", json={"train": {"loss": {"kind": "hinge"}}})
        assert resp.status_code == 422

    def test_returns_500_on_runner_error(self, client, mock_runner):
        mock_runner.run_train.side_effect = RuntimeError("training exploded")

        resp = client.post("/api/train", json={})

        assert resp.status_code == 500
        assert "training exploded" in resp.json()["detail"]


class TestVerifyEndpoint:
    """POST /api/verify"""

    def test_returns_report(self, client, mock_runner):
        resp = client.post("/api/verify", json={"seed": 3, "directions": 500})

        assert resp.status_code == 200
        assert resp.json()["passed"] is True
        mock_runner.verify.assert_called_once_with(seed=3, directions=500)

    def test_failed_suite_is_still_200(self, client, mock_runner):
        mock_runner.verify.return_value = VerificationReport(
            checks=[CheckResult(name="fisher_numeric", passed=False, detail="off by 1e-3")], passed=False, seed=0
        )

        body = client.post("/api/verify", json={}).json()

        assert body["passed"] is False
        assert body["checks"][0]["name"] == "fisher_numeric"

    def test_nonpositive_directions_returns_422(self, client):
        assert client.post("/api/verify", json={"directions": 0}).status_code == 422

    def test_returns_500_on_runner_error(self, client, mock_runner):
        mock_runner.verify.side_effect = RuntimeError("solver failed")

        resp = client.post("/api/verify", json={})

        assert resp.status_code == 500
        assert "solver failed" in resp.json()["detail"]


class TestRunsEndpoints:
    """GET/DELETE /api/runs"""

    def test_lists_runs(self, client):
        resp = client.get("/api/runs")

        assert resp.status_code == 200
        assert [run["run_id"] for run in resp.json()] == ["run_1"]

    def test_empty_history(self, client, mock_runner):
        mock_runner.registry.list_runs.return_value = []
        assert client.get("/api/runs").json() == []

    def test_list_returns_500_on_error(self, client, mock_runner):
        mock_runner.registry.list_runs.side_effect = RuntimeError("registry gone")
        assert client.get("/api/runs").status_code == 500

    def test_get_run(self, client, mock_runner):
        resp = client.get("/api/runs/run_1")

        assert resp.status_code == 200
        assert resp.json()["final_val_acc"] == 0.9
        mock_runner.registry.get.assert_called_once_with("run_1")

    def test_get_missing_run_returns_404(self, client, mock_runner):
        mock_runner.registry.get.return_value = None
        assert client.get("/api/runs/run_99").status_code == 404

    def test_delete_run(self, client, mock_runner):
        resp = client.delete("/api/runs/run_1")

        assert resp.status_code == 200
        assert resp.json()["status"] == "success"
        mock_runner.registry.remove.assert_called_once_with("run_1")

    def test_delete_missing_run_returns_404(self, client, mock_runner):
        mock_runner.registry.remove.return_value = False
        assert client.delete("/api/runs/run_99").status_code == 404
