import logging
from typing import List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from config import config
from experiments import ExperimentRunner, apply_environment
from models import ExperimentConfig, RunSummary, VerificationReport

logger = logging.getLogger(__name__)


# Pydantic models for request/response
class VerifyRequest(BaseModel):
    """Request model for an oracle suite run"""
    seed: Optional[int] = None
    directions: Optional[int] = Field(None, gt=0)


class DeleteResponse(BaseModel):
    status: str
    message: str


def create_app(runner: ExperimentRunner) -> FastAPI:
    """Build the HTTP service around an experiment runner"""
    app = FastAPI(title="PENEX Workbench", root_path="")

    app.add_middleware(
        CORSMiddleware,
        allow_origins=runner.config.CORS_ORIGINS,
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # Training and verification are CPU bound, so the endpoints are plain functions run in the threadpool

    @app.post("/api/train", response_model=RunSummary)
    def train_experiment(experiment: ExperimentConfig):
        """Train one model and return its summary"""
        try:
            _, summary = runner.run_train(apply_environment(experiment, runner.config))
            return summary
        except Exception as e:
            raise HTTPException(status_code=500, detail=str(e))

    @app.post("/api/verify", response_model=VerificationReport)
    def verify(request: VerifyRequest):
        """Run the oracle suite"""
        try:
            return runner.verify(seed=request.seed, directions=request.directions)
        except Exception as e:
            raise HTTPException(status_code=500, detail=str(e))

    @app.get("/api/runs", response_model=List[RunSummary])
    def list_runs():
        """Summaries of recent runs, oldest first"""
        try:
            return runner.registry.list_runs()
        except Exception as e:
            raise HTTPException(status_code=500, detail=str(e))

    @app.get("/api/runs/{run_id}", response_model=RunSummary)
    def get_run(run_id: str):
        summary = runner.registry.get(run_id)
        if summary is None:
            raise HTTPException(status_code=404, detail=f"Run {run_id} not found")
        return summary

    @app.delete("/api/runs/{run_id}", response_model=DeleteResponse)
    def delete_run(run_id: str):
        """Forget a run; its files stay on disk"""
        if not runner.registry.remove(run_id):
            raise HTTPException(status_code=404, detail=f"Run {run_id} not found")
        return DeleteResponse(status="success", message=f"Run {run_id} removed")

    return app


logging.basicConfig(level=config.LOG_LEVEL)
app = create_app(ExperimentRunner(config))
