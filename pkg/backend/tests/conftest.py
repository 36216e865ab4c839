"""Shared fixtures for the PENEX workbench test suite."""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import numpy as np
import pytest
from unittest.mock import MagicMock
from fastapi.testclient import TestClient

from app import create_app
from config import Config
from datasets import gen_blobs
from models import (
    CheckResult,
    DatasetSpec,
    ExperimentConfig,
    LossKind,
    LossSpec,
    ModelSpec,
    OptimSpec,
    RunSummary,
    TrainConfig,
    VerificationReport,
)


# ── Settings and configs ──────────────────────────────────────────────────────

@pytest.fixture
def settings(tmp_path):
    """Config with no environment overrides and a small worker pool"""
    return Config(OUTPUT_DIR=None, SEED=None, DEFAULT_OUTPUT_DIR=str(tmp_path / "runs"), MAX_WORKERS=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def blobs():
    return gen_blobs(80, 2, seed=3)


def _make_train_config(kind: LossKind = LossKind.PENEX, epochs: int = 2, **loss_fields) -> TrainConfig:
    return TrainConfig(
        loss=LossSpec(kind=kind, **loss_fields),
        model=ModelSpec(hidden_dims=[8]),
        optim=OptimSpec(learning_rate=1e-2),
        epochs=epochs,
        batch_size=16,
        seed=0,
    )


@pytest.fixture
def small_experiment(tmp_path):
    """Blobs experiment small enough to train in well under a second"""
    return ExperimentConfig(
        name="small",
        dataset=DatasetSpec(n=60, seed=1),
        train=_make_train_config(),
        output_dir=str(tmp_path / "out"),
    )


# ── API fixtures ──────────────────────────────────────────────────────────────

@pytest.fixture
def mock_runner():
    """MagicMock that mimics ExperimentRunner's public interface.

    Tests can override individual return values or side_effects before making
    requests through the client fixture.
    """
    runner = MagicMock()
    runner.config = Config(OUTPUT_DIR=None, SEED=None)
    summary = RunSummary(run_id="run_1", name="small", kind="penex", final_val_acc=0.9, final_rho=0.05)
    runner.run_train.return_value = (MagicMock(), summary)
    runner.verify.return_value = VerificationReport(
        checks=[CheckResult(name="gradients", passed=True)], passed=True, seed=0
    )
    runner.registry.list_runs.return_value = [summary]
    runner.registry.get.return_value = summary
    runner.registry.remove.return_value = True
    return runner


@pytest.fixture
def test_app(mock_runner):
    return create_app(mock_runner)


@pytest.fixture
def client(test_app):
    """Synchronous TestClient wrapping the app."""
    with TestClient(test_app) as c:
        yield c
