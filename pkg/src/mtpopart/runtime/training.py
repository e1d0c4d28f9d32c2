"""Training runs: A actors feeding one learner through a bounded queue.

Free-running mode puts every actor on its own thread. Synchronous mode runs
actors and learner alternately on the calling thread, which makes runs with
fixed seeds reproducible byte for byte.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from mtpopart.approximator import RMSPropState, init_params
from mtpopart.checkpoint import Checkpoint, check_fits, save_checkpoint
from mtpopart.experiment.variants import AgentConfig, make_agent_config
from mtpopart.normalizer import TaskStatsVector
from mtpopart.run_config import RunConfig
from mtpopart.run_config import save as save_config
from mtpopart.runtime.actor import ActorState, SnapshotBox, actor_loop, generate_rollout
from mtpopart.runtime.learner import LearnerSettings, learner_step
from mtpopart.runtime.metrics import MetricsStream
from mtpopart.runtime.rollouts import Rollout, RolloutQueue
from mtpopart.taskworld.envs import EnvInstance, ObservationLayout
from mtpopart.taskworld.specs import N_ACTIONS, Suite, load_suite

log = logging.getLogger(__name__)

_BATCH_TIMEOUT = 120.0  # seconds without a rollout before the learner gives up


@dataclass(slots=True)
class TrainingResult:
    checkpoint: Checkpoint
    frames_total: int = 0
    steps: int = 0
    enqueued: int = 0
    consumed: int = 0
    discarded: int = 0
    rows: list[dict[str, Any]] = field(default_factory=list)

    @property
    def mean_staleness(self) -> float:
        values = [r["staleness"] for r in self.rows]
        return float(np.mean(values)) if values else 0.0


def settings_from(config: RunConfig) -> LearnerSettings:
    return LearnerSettings(
        learning_rate=config.learning_rate,
        entropy_cost=config.entropy_cost,
        rmsprop_epsilon=config.rmsprop_epsilon,
        rmsprop_decay=config.rmsprop_decay,
        max_grad_norm=config.max_grad_norm,
        baseline_cost=config.baseline_cost,
        update_order=config.update_order,
    )


def initial_checkpoint(config: RunConfig, suite: Suite, agent: AgentConfig) -> Checkpoint:
    layout = ObservationLayout.for_suite(suite)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    params = init_params(layout.dim, N_ACTIONS, agent.n_heads(len(suite)), rng, hidden=config.hidden)
    stats = TaskStatsVector.initial(len(suite), beta=config.beta, sigma_lo=config.sigma_lo, sigma_hi=config.sigma_hi)
    return Checkpoint(params=params, stats=stats, variant=agent.variant, optimizer=RMSPropState.zeros_like(params))


def make_actors(config: RunConfig, suite: Suite, seed_offset: int = 0) -> list[ActorState]:
    """Tasks assigned round-robin; each actor owns its environment for the whole run."""
    layout = ObservationLayout.for_suite(suite)
    count = config.resolved_actors(len(suite))
    seqs = np.random.SeedSequence([config.seed, seed_offset]).spawn(count)
    actors: list[ActorState] = []
    for actor_id, seq in enumerate(seqs):
        env_seed, policy_seq = seq.spawn(2)
        env = EnvInstance(spec=suite.tasks[actor_id % len(suite)], layout=layout, seed=int(env_seed.generate_state(1)[0]))
        actors.append(ActorState(actor_id=actor_id, env=env, rng=np.random.default_rng(policy_seq)))
    return actors


class _Run:
    """Learner-side state of one run; the learner is the only writer of params, stats and optimizer."""

    def __init__(self, config: RunConfig, suite: Suite, start: Checkpoint, out_dir: Path | None, budget: int) -> None:
        self.config = config
        self.suite = suite
        self.agent = make_agent_config(start.variant)
        self.settings = settings_from(config)
        self.params = start.params
        self.stats = start.stats
        self.optimizer = start.optimizer.copy() if start.optimizer else RMSPropState.zeros_like(start.params)
        self.out_dir = out_dir
        self.budget = budget
        self.frames_total = 0
        self.steps = 0
        self.metrics = MetricsStream(out_dir / "metrics.csv" if out_dir else None, len(suite))

    @property
    def done(self) -> bool:
        return self.frames_total >= self.budget

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(params=self.params, stats=self.stats, variant=self.agent.variant, optimizer=self.optimizer)

    def learn(self, batch: list[Rollout], queue_depth: int) -> None:
        outcome = learner_step(batch, self.params, self.stats, self.optimizer, self.agent, self.settings)
        self.params, self.stats = outcome.params, outcome.stats
        self.frames_total += outcome.metrics.frames
        self.steps += 1
        self.metrics.observe(batch)
        self.metrics.record(self.steps, self.frames_total, self.stats, outcome.metrics, queue_depth)
        interval = self.config.checkpoint_interval
        if self.out_dir and interval and self.steps % interval == 0:
            save_checkpoint(self.out_dir / f"step-{self.steps}.ckpt", self.checkpoint())


def _run_synchronous(run: _Run, actors: list[ActorState]) -> tuple[int, int]:
    produced = 0
    cursor = 0
    while not run.done:
        batch: list[Rollout] = []
        for _ in range(run.config.batch_size):
            rollout = generate_rollout(actors[cursor], run.params, run.config.unroll_length)
            assert rollout is not None
            batch.append(rollout)
            cursor = (cursor + 1) % len(actors)
            produced += 1
        run.learn(batch, queue_depth=0)
    return produced, produced


def _run_threaded(run: _Run, actors: list[ActorState]) -> tuple[int, int, int]:
    queue = RolloutQueue(run.config.resolved_queue_capacity(len(run.suite)))
    snapshots = SnapshotBox(run.params)
    stop = threading.Event()
    threads = [
        threading.Thread(
            target=actor_loop,
            args=(actor, snapshots, queue, run.config.unroll_length, stop),
            name=f"actor-{actor.actor_id}",
            daemon=True,
        )
        for actor in actors
    ]
    for t in threads:
        t.start()
    try:
        while not run.done:
            batch = queue.get_batch(run.config.batch_size, timeout=_BATCH_TIMEOUT)
            run.learn(batch, queue_depth=len(queue))
            snapshots.publish(run.params)
    finally:
        stop.set()
        queue.close()
        for t in threads:
            t.join()
        dropped = queue.drain()
        log.info("actors joined; %d queued rollouts discarded", dropped)
    return queue.enqueued, queue.consumed, queue.discarded


def run_training(
    config: RunConfig,
    *,
    out_dir: Path | None = None,
    start: Checkpoint | None = None,
    frames: int | None = None,
    seed_offset: int = 0,
) -> TrainingResult:
    """Train until the summed frame count reaches the budget; writes config, metrics and checkpoints to out_dir.

    `start` resumes from an existing checkpoint (PBT members), `frames`
    overrides config.frames for this call.
    """
    suite = load_suite(config.suite)
    agent = make_agent_config(config.variant)
    if start is None:
        start = initial_checkpoint(config, suite, agent)
    check_fits(start, suite)
    budget = config.frames if frames is None else frames

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        save_config(config, out_dir / "config.txt")

    run = _Run(config, suite, start, out_dir, budget)
    actors = make_actors(config, suite, seed_offset)
    log.info(
        "training %s on %s: %d actors, %d frames, %s mode",
        agent.variant,
        suite.name,
        len(actors),
        budget,
        "synchronous" if config.synchronous else "threaded",
    )
    try:
        if budget <= 0:
            enqueued = consumed = discarded = 0
        elif config.synchronous:
            enqueued, consumed = _run_synchronous(run, actors)
            discarded = 0
        else:
            enqueued, consumed, discarded = _run_threaded(run, actors)
    except Exception:
        if out_dir is not None:
            save_checkpoint(out_dir / "crash.ckpt", run.checkpoint())
        raise

    final = run.checkpoint()
    if out_dir is not None:
        save_checkpoint(out_dir / "final.ckpt", final)
    return TrainingResult(
        checkpoint=final,
        frames_total=run.frames_total,
        steps=run.steps,
        enqueued=enqueued,
        consumed=consumed,
        discarded=discarded,
        rows=run.metrics.rows,
    )
