"""Tests for runtime/metrics.py."""

import math
from dataclasses import replace

import numpy as np

from mtpopart.normalizer import TaskStatsVector
from mtpopart.runtime.learner import StepMetrics
from mtpopart.runtime.metrics import RETURN_WINDOW, MetricsStream
from mtpopart.runtime.rollouts import Rollout
from mtpopart.storage import read_csv_dicts


def _rollout(task_id, returns):
    return Rollout(
        task_id=task_id,
        observations=np.zeros((2, 3)),
        actions=np.zeros(1, dtype=np.int64),
        rewards=np.zeros(1),
        behavior_logp=np.zeros(1),
        discounts=np.ones(1),
        actor_id=0,
        params_version=0,
        episode_returns=returns,
    )


STEP = StepMetrics(
    policy_loss=0.1,
    value_loss=0.2,
    entropy=1.3,
    grad_norm=4.0,
    preserve_error=0.0,
    staleness=1.5,
    frames=6,
    skipped=False,
)


def test_return_mean_uses_recent_window():
    stream = MetricsStream(None, n_tasks=2)
    stream.observe([_rollout(1, tuple(float(i) for i in range(RETURN_WINDOW + 10)))])

    assert stream.return_mean(1) == sum(range(10, RETURN_WINDOW + 10)) / RETURN_WINDOW
    assert math.isnan(stream.return_mean(0))


def test_rows_written_per_task(tmp_path):
    path = tmp_path / "metrics.csv"
    stream = MetricsStream(path, n_tasks=2)
    stats = TaskStatsVector.initial(2)

    stream.record(1, 6, stats, STEP, queue_depth=3)
    stream.record(2, 12, stats, replace(STEP, skipped=True), queue_depth=0)

    rows = read_csv_dicts(path)
    assert [r["step"] for r in rows] == ["1", "2"]
    assert rows[0]["task1_sigma"] == "1.0"
    assert rows[0]["queue_depth"] == "3"
    assert rows[1]["skipped"] == "1"
    assert len(stream.rows) == 2
