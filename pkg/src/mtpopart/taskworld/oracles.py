"""Reference returns for score normalization.

Both references are gamma-discounted returns of raw (scaled, untransformed)
rewards from the start state, with the reward for step t+1 discounted by
gamma**t. The optimal reference comes from finite-horizon value iteration
over the episode cap; the random reference is a Monte Carlo estimate under a
uniform policy.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from mtpopart.storage import atomic_write, read_csv_rows
from mtpopart.taskworld.envs import EnvInstance, ObservationLayout, is_goal, next_state, raw_reward, reset, start_state, step
from mtpopart.taskworld.specs import N_ACTIONS, Suite, TaskSpec, format_suite

log = logging.getLogger(__name__)

RESIDUAL = 1e-10


def _action_values(spec: TaskSpec, values: NDArray[np.float64]) -> NDArray[np.float64]:
    """Q(s, a) for chain/grid under next-step values `values`."""
    q = np.zeros((spec.n_states, N_ACTIONS))
    for s in range(spec.n_states):
        if is_goal(spec, s):
            continue
        for a in range(N_ACTIONS):
            s2 = next_state(spec, s, a)
            cont = 0.0 if is_goal(spec, s2) else spec.gamma * values[s2]
            q[s, a] = spec.reward_scale * raw_reward(spec, s, s2) + cont
    return q


def _value_iteration(spec: TaskSpec) -> list[NDArray[np.float64]]:
    """Per-horizon optimal values: entry h holds V with h steps left (h=0 is all zeros)."""
    values = [np.zeros(spec.n_states)]
    for _ in range(spec.episode_cap):
        v = _action_values(spec, values[-1]).max(axis=1)
        residual = float(np.max(np.abs(v - values[-1])))
        values.append(v)
        if residual < RESIDUAL:
            break
    return values


def oracle_optimal_return(spec: TaskSpec) -> float:
    if spec.reward_scale == 0:
        return 0.0
    if spec.family == "dense_walk":
        # rewards ignore actions: expected payout per paid step is scale * p
        horizon = spec.episode_cap
        if spec.sparsity == "dense":
            weight = sum(spec.gamma**t for t in range(horizon))
        else:
            weight = spec.gamma ** (horizon - 1)
        return spec.reward_scale * spec.p * weight
    return float(_value_iteration(spec)[-1][start_state(spec)])


def optimal_action_table(spec: TaskSpec) -> NDArray[np.int64]:
    """Greedy action per state with the full episode cap remaining; ties go to the lowest action."""
    if spec.family == "dense_walk":
        return np.ones(spec.n_states, dtype=np.int64)
    values = _value_iteration(spec)
    q = _action_values(spec, values[-2] if len(values) > 1 else values[-1])
    return np.argmax(q, axis=1).astype(np.int64)


def greedy_oracle_policy(layout: ObservationLayout, spec: TaskSpec):
    """Observation -> action probabilities that always pick the value-iteration action."""
    table = optimal_action_table(spec)
    offset = layout.offsets[spec.shape_key]

    def policy(obs: NDArray[np.float64]) -> NDArray[np.float64]:
        state = int(np.argmax(obs[offset : offset + spec.n_states]))
        probs = np.zeros(N_ACTIONS)
        probs[table[state]] = 1.0
        return probs

    return policy


@dataclass(frozen=True, slots=True)
class RandomReference:
    mean: float
    stderr: float


def discounted_episode(env: EnvInstance, choose) -> float:
    """Run one episode from reset; `choose(obs)` returns an action."""
    obs = reset(env)
    total, discount = 0.0, 1.0
    while True:
        result = step(env, choose(obs))
        total += discount * result.raw_reward
        discount *= env.spec.gamma
        if result.terminated:
            return total
        obs = result.observation


def oracle_random_return(spec: TaskSpec, episodes: int, seed: int) -> RandomReference:
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if spec.reward_scale == 0:
        return RandomReference(mean=0.0, stderr=0.0)
    layout = ObservationLayout(offsets={spec.shape_key: 0}, dim=spec.n_states)
    rng = np.random.default_rng(seed)
    env = EnvInstance(spec=spec, layout=layout, seed=int(rng.integers(2**32)))
    returns = np.array([discounted_episode(env, lambda _obs: int(rng.integers(N_ACTIONS))) for _ in range(episodes)])
    stderr = float(returns.std(ddof=1) / math.sqrt(episodes)) if episodes > 1 else 0.0
    return RandomReference(mean=float(returns.mean()), stderr=stderr)


@dataclass(frozen=True, slots=True)
class OracleRow:
    task_id: int
    optimal: float
    random: float
    stderr: float


def compute_oracles(suite: Suite, episodes: int, seed: int) -> list[OracleRow]:
    rows: list[OracleRow] = []
    for task in suite.tasks:
        optimal = oracle_optimal_return(task)
        if task.family == "dense_walk":
            # rewards ignore actions, so every policy earns the optimal return
            rows.append(OracleRow(task.task_id, optimal, optimal, 0.0))
            continue
        rand = oracle_random_return(task, episodes, seed + task.task_id)
        rows.append(OracleRow(task.task_id, optimal, rand.mean, rand.stderr))
    return rows


@dataclass(frozen=True, slots=True)
class _CachedRow:
    key: str
    task_id: int
    optimal: float
    random: float
    stderr: float


def cache_key(suite: Suite, episodes: int, seed: int) -> str:
    """Digest of the task definitions and Monte Carlo settings the references depend on."""
    tasks = format_suite(suite).split("\n", 1)[1]  # drop the "# suite <name>" header
    return hashlib.sha256(f"{tasks}episodes={episodes} seed={seed}\n".encode()).hexdigest()[:16]


def oracle_cache(suite: Suite, path: Path, *, episodes: int = 2000, seed: int = 0) -> list[OracleRow]:
    """Reuse cached references computed for these tasks and settings; otherwise compute and write them."""
    key = cache_key(suite, episodes, seed)
    cached = sorted((r for r in read_csv_rows(path, _CachedRow) if r.key == key), key=lambda r: r.task_id)
    if [r.task_id for r in cached] == list(range(len(suite))):
        return [OracleRow(r.task_id, r.optimal, r.random, r.stderr) for r in cached]
    if path.exists():
        log.info("oracle cache %s does not match suite %s; recomputing", path, suite.name)
    log.info("computing oracle references for %s (%d random episodes per task)", suite.name, episodes)
    rows = compute_oracles(suite, episodes, seed)
    lines = ["key,task_id,optimal,random,stderr"]
    lines += [f"{key},{r.task_id},{r.optimal!r},{r.random!r},{r.stderr!r}" for r in rows]
    atomic_write(path, ("\n".join(lines) + "\n").encode())
    return rows
