import os
from dataclasses import dataclass, field
from typing import List, Optional

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _optional_int(name: str) -> Optional[int]:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else None


@dataclass
class Config:
    """Settings for the PENEX workbench"""
    # Overrides applied to every loaded experiment when set
    OUTPUT_DIR: Optional[str] = os.getenv("PENEX_OUTPUT_DIR") or None
    SEED: Optional[int] = _optional_int("PENEX_SEED")

    DEFAULT_OUTPUT_DIR: str = "./runs"
    LOG_LEVEL: str = os.getenv("PENEX_LOG_LEVEL", "INFO")

    # Experiment orchestration
    MAX_WORKERS: int = int(os.getenv("PENEX_MAX_WORKERS", "4"))   # parallel runs in sweeps and ablations
    MAX_RUN_HISTORY: int = 20                                     # finished runs kept by the registry

    # Verification
    VERIFY_SEED: int = 0
    WEAK_LEARNER_DIRECTIONS: int = 100_000    # random unit directions searched per step size

    # HTTP service
    CORS_ORIGINS: List[str] = field(default_factory=lambda: ["*"])

config = Config()
