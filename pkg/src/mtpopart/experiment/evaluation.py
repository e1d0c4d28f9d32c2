"""Frozen-policy evaluation against oracle references.

The policy sees only observations, never the task id. Nothing here learns or
touches normalization statistics; the checkpoint is only read.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from mtpopart.approximator import NetworkParams, forward, softmax
from mtpopart.checkpoint import Checkpoint, check_fits
from mtpopart.experiment.scores import ScoreRecord, score_record
from mtpopart.storage import append_csv
from mtpopart.taskworld.envs import EnvInstance, ObservationLayout
from mtpopart.taskworld.oracles import OracleRow, compute_oracles, discounted_episode, oracle_cache
from mtpopart.taskworld.specs import N_ACTIONS, Suite

log = logging.getLogger(__name__)

Policy = Callable[[NDArray[np.float64]], NDArray[np.float64]]  # observation -> action probabilities

ORACLE_EPISODES = 2000


def frozen_policy(params: NetworkParams) -> Policy:
    def policy(obs: NDArray[np.float64]) -> NDArray[np.float64]:
        logits, _ = forward(params, obs)
        return softmax(logits)

    return policy


def mean_return(env: EnvInstance, policy: Policy, episodes: int, rng: np.random.Generator) -> float:
    """Mean discounted raw return of `policy` over `episodes` episodes from the start state."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")

    def choose(obs: NDArray[np.float64]) -> int:
        return int(rng.choice(N_ACTIONS, p=policy(obs)))

    return float(np.mean([discounted_episode(env, choose) for _ in range(episodes)]))


def evaluate(
    checkpoint: Checkpoint,
    suite: Suite,
    episodes_per_task: int,
    seed: int,
    *,
    policies: Mapping[int, Policy] | None = None,
    oracles: Sequence[OracleRow] | None = None,
) -> list[ScoreRecord]:
    """Score the checkpoint's policy on every task of the suite.

    `policies` replaces the network policy for the given task ids (used to
    score reference policies such as the value-iteration one). `oracles`
    defaults to freshly computed references.
    """
    if episodes_per_task < 1:
        raise ValueError(f"episodes_per_task must be >= 1, got {episodes_per_task}")
    check_fits(checkpoint, suite)
    if oracles is None:
        oracles = compute_oracles(suite, ORACLE_EPISODES, seed)
    refs = {row.task_id: row for row in oracles}
    missing = [t.task_id for t in suite.tasks if t.task_id not in refs]
    if missing:
        raise ValueError(f"no oracle references for tasks {missing}")

    layout = ObservationLayout.for_suite(suite)
    network = frozen_policy(checkpoint.params)
    seqs = np.random.SeedSequence(seed).spawn(len(suite))
    records: list[ScoreRecord] = []
    for task, seq in zip(suite.tasks, seqs, strict=True):
        env_seq, policy_seq = seq.spawn(2)
        env = EnvInstance(spec=task, layout=layout, seed=int(env_seq.generate_state(1)[0]))
        policy = (policies or {}).get(task.task_id, network)
        raw = mean_return(env, policy, episodes_per_task, np.random.default_rng(policy_seq))
        ref = refs[task.task_id]
        records.append(score_record(task.task_id, raw, ref.random, ref.optimal))
        log.debug("task %d: raw %.4f normalized %.4f", task.task_id, raw, records[-1].normalized)
    return records


# --- result tables ---


def write_breakdown(path: Path, records: Sequence[ScoreRecord]) -> None:
    """Per-task score breakdown; replaces any previous file."""
    path.unlink(missing_ok=True)
    for record in records:
        append_csv(path, record)


@dataclass(frozen=True, slots=True)
class ResultRow:
    variant: str
    suite: str
    median_normalized: float
    mean_capped: float


def append_result(path: Path, row: ResultRow) -> None:
    append_csv(path, row)


def evaluate_with_cache(
    checkpoint: Checkpoint,
    suite: Suite,
    episodes_per_task: int,
    seed: int,
    *,
    oracle_path: Path,
    oracle_episodes: int = ORACLE_EPISODES,
) -> list[ScoreRecord]:
    """evaluate() with oracle references read from (or written to) `oracle_path`."""
    check_fits(checkpoint, suite)
    oracles = oracle_cache(suite, oracle_path, episodes=oracle_episodes, seed=seed)
    return evaluate(checkpoint, suite, episodes_per_task, seed, oracles=oracles)
