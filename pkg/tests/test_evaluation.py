"""Tests for experiment/evaluation.py: frozen-policy scoring."""

import math

import pytest

from mtpopart.checkpoint import CheckpointError, fingerprint
from mtpopart.experiment.evaluation import (
    ResultRow,
    append_result,
    evaluate,
    evaluate_with_cache,
    frozen_policy,
    write_breakdown,
)
from mtpopart.experiment.scores import ScoreRecord
from mtpopart.experiment.variants import make_agent_config
from mtpopart.run_config import RunConfig
from mtpopart.runtime.training import initial_checkpoint
from mtpopart.storage import read_csv_rows
from mtpopart.taskworld.envs import ObservationLayout
from mtpopart.taskworld.oracles import compute_oracles, greedy_oracle_policy
from mtpopart.taskworld.specs import builtin_suite

SUITE = builtin_suite("pair2")


def _checkpoint(suite_name="pair2", variant="popart"):
    config = RunConfig(suite=suite_name, variant=variant, hidden=8)
    return initial_checkpoint(config, builtin_suite(suite_name), make_agent_config(variant))


def test_untrained_policy_is_uniform():
    policy = frozen_policy(_checkpoint().params)
    obs = ObservationLayout.for_suite(SUITE).encode(SUITE.tasks[0], 0)

    assert policy(obs).tolist() == pytest.approx([0.25] * 4)


def test_uniform_policy_scores_near_zero():
    oracles = compute_oracles(SUITE, episodes=1000, seed=3)

    records = evaluate(_checkpoint(), SUITE, 1000, seed=8, oracles=oracles)

    for record, ref in zip(records, oracles, strict=True):
        # both estimates come from 1000 uniform episodes
        tolerance = 4 * math.sqrt(2) * ref.stderr
        assert abs(record.raw_return - ref.random) < tolerance


def test_value_iteration_policy_scores_one():
    layout = ObservationLayout.for_suite(SUITE)
    policies = {t.task_id: greedy_oracle_policy(layout, t) for t in SUITE.tasks}
    oracles = compute_oracles(SUITE, episodes=50, seed=0)

    records = evaluate(_checkpoint(), SUITE, 5, seed=1, policies=policies, oracles=oracles)

    assert [r.normalized for r in records] == pytest.approx([1.0, 1.0])
    assert [r.capped for r in records] == pytest.approx([1.0, 1.0])


def test_evaluation_leaves_checkpoint_untouched():
    ckpt = _checkpoint()
    before = fingerprint(ckpt)

    evaluate(ckpt, SUITE, 3, seed=0, oracles=compute_oracles(SUITE, episodes=10, seed=0))

    assert fingerprint(ckpt) == before


def test_evaluation_is_seeded():
    oracles = compute_oracles(SUITE, episodes=10, seed=0)

    first = evaluate(_checkpoint(), SUITE, 20, seed=5, oracles=oracles)
    second = evaluate(_checkpoint(), SUITE, 20, seed=5, oracles=oracles)

    assert first == second


def test_zero_episodes_rejected():
    with pytest.raises(ValueError, match="episodes_per_task"):
        evaluate(_checkpoint(), SUITE, 0, seed=0)


def test_checkpoint_for_another_suite_rejected():
    with pytest.raises(CheckpointError):
        evaluate(_checkpoint("scale6"), SUITE, 5, seed=0)


def test_missing_references_rejected():
    oracles = compute_oracles(SUITE, episodes=10, seed=0)[:1]

    with pytest.raises(ValueError, match="no oracle references"):
        evaluate(_checkpoint(), SUITE, 5, seed=0, oracles=oracles)


def test_cached_evaluation_writes_oracle_file(tmp_path):
    path = tmp_path / "oracles.csv"

    records = evaluate_with_cache(_checkpoint(), SUITE, 5, seed=0, oracle_path=path, oracle_episodes=20)

    assert path.exists()
    assert [r.task_id for r in records] == [0, 1]


def test_breakdown_replaces_previous_file(tmp_path):
    path = tmp_path / "breakdown.csv"
    record = ScoreRecord(0, 0.5, 0.0, 1.0, 0.5, 0.5)

    write_breakdown(path, [record, record])
    write_breakdown(path, [record])

    assert read_csv_rows(path, ScoreRecord) == [record]


def test_results_append(tmp_path):
    path = tmp_path / "results.csv"
    rows = [ResultRow("popart", "scale6", 0.8, 0.7), ResultRow("baseline", "scale6", 0.1, 0.2)]

    for row in rows:
        append_result(path, row)

    assert read_csv_rows(path, ResultRow) == rows
