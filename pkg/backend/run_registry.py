import threading
from typing import Dict, List, Optional

from models import RunSummary


class RunRegistry:
    """Keeps summaries of the most recent runs, keyed by generated run ids"""

    def __init__(self, max_history: int = 20):
        self.max_history = max_history
        self.runs: Dict[str, RunSummary] = {}
        self.run_counter = 0
        self._lock = threading.Lock()

    def register(self, summary: RunSummary) -> RunSummary:
        """Store a summary under a new id and return the stored copy"""
        with self._lock:
            self.run_counter += 1
            run_id = f"run_{self.run_counter}"
            stored = summary.model_copy(update={"run_id": run_id})
            self.runs[run_id] = stored

            # Keep history within limits, oldest first out
            while len(self.runs) > self.max_history:
                del self.runs[next(iter(self.runs))]
            return stored

    def get(self, run_id: str) -> Optional[RunSummary]:
        return self.runs.get(run_id)

    def list_runs(self) -> List[RunSummary]:
        """Stored summaries, oldest first"""
        with self._lock:
            return list(self.runs.values())

    def remove(self, run_id: str) -> bool:
        with self._lock:
            return self.runs.pop(run_id, None) is not None
