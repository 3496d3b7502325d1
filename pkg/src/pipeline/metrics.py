"""Append-only CSV streams for learner metrics and episode records"""

import math
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src.core.exceptions import UsageError
from src.utils.records import append_records_csv

METRIC_COLUMNS = ["step", "bellman_loss", "ceb_loss", "infonce", "td_error_mean", "eps", "params_version"]
EPISODE_COLUMNS = ["task_id", "split", "success", "steps", "mean_td_error", "mean_infonce", "seed"]


@dataclass
class EpisodeRecord:
    task_id: str
    split: str
    success: int
    steps: int
    mean_td_error: Optional[float]
    mean_infonce: Optional[float]
    seed: int

    def __post_init__(self):
        if self.success not in (0, 1):
            raise UsageError(f"success must be 0 or 1, got {self.success}")
        for name in ("mean_td_error", "mean_infonce"):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise UsageError(f"{name} must be finite, got {value}")

    def to_row(self) -> Dict[str, Any]:
        return asdict(self)


def epsilon(step: int, total_steps: int, start: float, end: float, decay_fraction: float) -> float:
    """Linear decay from start to end over the first decay_fraction of training, then flat"""
    horizon = decay_fraction * total_steps
    if horizon <= 0:
        return end
    progress = min(1.0, max(0.0, step / horizon))
    return start + progress * (end - start)


class CsvStream:
    """Buffered appends to one CSV file with a fixed column order; thread-safe"""

    def __init__(self, path: str | Path, columns: Sequence[str], flush_every: int = 100):
        self.path = Path(path)
        self.columns = list(columns)
        self.flush_every = flush_every
        self._rows: List[Dict[str, Any]] = []
        self._lock = threading.Lock()
        self.written = 0

    def append(self, row: Dict[str, Any]) -> None:
        with self._lock:
            self._rows.append(row)
            pending = len(self._rows) >= self.flush_every
        if pending:
            self.flush()

    def flush(self) -> int:
        with self._lock:
            rows, self._rows = self._rows, []
            n = append_records_csv(self.path, rows, self.columns)
            self.written += n
        return n
