"""Append-only metrics stream: one CSV row per learner step."""

from __future__ import annotations

from collections import deque
from pathlib import Path
from typing import Any

import numpy as np

from mtpopart.normalizer import TaskStatsVector
from mtpopart.runtime.learner import StepMetrics
from mtpopart.runtime.rollouts import Rollout
from mtpopart.storage import append_csv_row

RETURN_WINDOW = 100


class MetricsStream:
    """Tracks per-task episode returns and writes rows; no wall-clock fields, so runs diff cleanly."""

    def __init__(self, path: Path | None, n_tasks: int) -> None:
        self.path = path
        self.n_tasks = n_tasks
        self._returns: list[deque[float]] = [deque(maxlen=RETURN_WINDOW) for _ in range(n_tasks)]
        self.rows: list[dict[str, Any]] = []

    def observe(self, batch: list[Rollout]) -> None:
        for rollout in batch:
            self._returns[rollout.task_id].extend(rollout.episode_returns)

    def return_mean(self, task_id: int) -> float:
        window = self._returns[task_id]
        return float(np.mean(window)) if window else float("nan")

    def record(
        self,
        step: int,
        frames_total: int,
        stats: TaskStatsVector,
        metrics: StepMetrics,
        queue_depth: int,
    ) -> dict[str, Any]:
        row: dict[str, Any] = {"step": step, "frames_total": frames_total}
        for i in range(self.n_tasks):
            row[f"task{i}_return"] = self.return_mean(i)
            row[f"task{i}_mu"] = stats[i].mu
            row[f"task{i}_sigma"] = stats[i].sigma
        row |= {
            "policy_loss": metrics.policy_loss,
            "value_loss": metrics.value_loss,
            "entropy": metrics.entropy,
            "grad_norm": metrics.grad_norm,
            "preserve_error": metrics.preserve_error,
            "queue_depth": queue_depth,
            "staleness": metrics.staleness,
            "skipped": metrics.skipped,
        }
        self.rows.append(row)
        if self.path is not None:
            append_csv_row(self.path, row)
        return row
