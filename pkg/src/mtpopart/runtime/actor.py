"""Actors: generate fixed-length rollouts with the latest parameter snapshot.

Each actor owns one environment for its whole life. Episodes continue across
rollout boundaries; a stop signal mid-rollout discards the partial rollout.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

import numpy as np

from mtpopart.approximator import NetworkParams, forward, log_softmax
from mtpopart.runtime.rollouts import QueueClosed, Rollout, RolloutQueue
from mtpopart.taskworld.envs import EnvInstance, reset, step

log = logging.getLogger(__name__)


class SnapshotBox:
    """Holds the latest published parameters. Snapshots are immutable, so readers never see a torn one."""

    def __init__(self, params: NetworkParams) -> None:
        self._params = params
        self._lock = threading.Lock()

    def latest(self) -> NetworkParams:
        with self._lock:
            return self._params

    def publish(self, params: NetworkParams) -> None:
        with self._lock:
            self._params = params


@dataclass(slots=True)
class ActorState:
    actor_id: int
    env: EnvInstance
    rng: np.random.Generator
    obs: np.ndarray | None = None
    episode_return: float = 0.0
    rollouts_sent: int = 0
    partial_discarded: int = 0


def generate_rollout(
    actor: ActorState, params: NetworkParams, length: int, stop: threading.Event | None = None
) -> Rollout | None:
    """Run `length` transitions; returns None when stopped before finishing."""
    env = actor.env
    if actor.obs is None:
        actor.obs = reset(env)
    observations = [actor.obs]
    actions = np.empty(length, dtype=np.int64)
    rewards = np.empty(length)
    behavior_logp = np.empty(length)
    discounts = np.empty(length)
    finished: list[float] = []

    for k in range(length):
        if stop is not None and stop.is_set():
            actor.partial_discarded += 1
            return None
        logits, _ = forward(params, actor.obs)
        logp = log_softmax(logits)
        action = int(actor.rng.choice(logp.shape[0], p=np.exp(logp)))
        result = step(env, action)
        actions[k] = action
        behavior_logp[k] = logp[action]
        rewards[k] = result.reward
        actor.episode_return += result.raw_reward
        if result.terminated:
            discounts[k] = 0.0
            finished.append(actor.episode_return)
            actor.episode_return = 0.0
            actor.obs = reset(env)
        else:
            discounts[k] = env.spec.gamma
            actor.obs = result.observation
        # after a termination the next row is the fresh episode's first observation,
        # which only ever meets a zero discount
        observations.append(actor.obs)

    return Rollout(
        task_id=env.spec.task_id,
        observations=np.stack(observations),
        actions=actions,
        rewards=rewards,
        behavior_logp=behavior_logp,
        discounts=discounts,
        actor_id=actor.actor_id,
        params_version=params.version,
        episode_returns=tuple(finished),
    )


def actor_loop(
    actor: ActorState,
    snapshots: SnapshotBox,
    queue: RolloutQueue,
    length: int,
    stop: threading.Event,
) -> None:
    """Fetch the latest snapshot before each rollout, generate, enqueue; exit on stop or closed queue."""
    log.info("actor %d started on task %d", actor.actor_id, actor.env.spec.task_id)
    try:
        while not stop.is_set():
            rollout = generate_rollout(actor, snapshots.latest(), length, stop)
            if rollout is None:
                break
            queue.put(rollout)
            actor.rollouts_sent += 1
    except QueueClosed:
        pass
    except Exception:
        log.exception("actor %d failed", actor.actor_id)
        raise
    log.info("actor %d stopped after %d rollouts", actor.actor_id, actor.rollouts_sent)
