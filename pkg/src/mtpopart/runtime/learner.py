"""The learner step: v-trace targets, PopArt-normalized loss, RMSProp, statistics, output preservation.

Default order: (1) one actor-critic update from the whole batch, (2) one
statistics update per rollout, applied sequentially, (3) output-preserving
rescaling of every head whose statistics moved. `stats_first` inverts the
order so the update already sees the new statistics.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from mtpopart.approximator import (
    LossComponents,
    LossInputs,
    NetworkParams,
    RMSPropState,
    TaskIdError,
    compute_gradients,
    forward_batch,
    log_softmax,
    rmsprop_step,
)
from mtpopart.experiment.variants import AgentConfig
from mtpopart.normalizer import TaskStatsVector, preserve_heads, update_stats_from_rollout
from mtpopart.returns import VTraceInputs, compute_vtrace
from mtpopart.runtime.rollouts import Rollout

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class LearnerSettings:
    learning_rate: float = 6e-4
    entropy_cost: float = 3e-3
    rmsprop_epsilon: float = 1e-5
    rmsprop_decay: float = 0.99
    max_grad_norm: float = 40.0
    baseline_cost: float = 0.5
    update_order: str = "gradient_first"


@dataclass(frozen=True, slots=True)
class StepMetrics:
    policy_loss: float
    value_loss: float
    entropy: float
    grad_norm: float
    preserve_error: float  # max |v_before - v_after| over batch observations
    staleness: float  # mean learner version minus rollout version
    frames: int
    skipped: bool


@dataclass(frozen=True, slots=True)
class StepOutcome:
    params: NetworkParams
    stats: TaskStatsVector
    metrics: StepMetrics


@dataclass(frozen=True, slots=True)
class _RolloutTargets:
    task_id: int
    head: int
    observations: NDArray[np.float64]  # (n, D)
    actions: NDArray[np.int64]
    vtrace_returns: NDArray[np.float64]  # unnormalized
    value_targets: NDArray[np.float64]  # normalized
    advantages: NDArray[np.float64]  # normalized policy coefficients


def _targets_for(rollout: Rollout, params: NetworkParams, stats: TaskStatsVector, agent: AgentConfig) -> _RolloutTargets:
    if not 0 <= rollout.task_id < len(stats):
        raise TaskIdError(f"rollout from task {rollout.task_id} has no statistics entry ({len(stats)} tasks)")
    head = agent.head_for(rollout.task_id)
    task_stats = stats[rollout.task_id]
    mu, sigma = task_stats.mu, task_stats.sigma
    n = len(rollout)

    logits, normalized, _ = forward_batch(params, rollout.observations)
    target_logp = log_softmax(logits[:n])[np.arange(n), rollout.actions]
    head_values = normalized[:, head]
    vt = compute_vtrace(
        VTraceInputs(
            rewards=rollout.rewards,
            values=sigma * head_values + mu,
            target_logp=target_logp,
            behavior_logp=rollout.behavior_logp,
            discounts=rollout.discounts,
        )
    )
    return _RolloutTargets(
        task_id=rollout.task_id,
        head=head,
        observations=rollout.observations[:n],
        actions=rollout.actions,
        vtrace_returns=vt.vtrace_returns,
        value_targets=(vt.vtrace_returns - mu) / sigma,
        advantages=(vt.policy_targets - mu) / sigma - head_values[:n],
    )


def _loss_inputs(targets: Sequence[_RolloutTargets], settings: LearnerSettings) -> LossInputs:
    return LossInputs(
        observations=np.concatenate([t.observations for t in targets]),
        actions=np.concatenate([t.actions for t in targets]),
        task_ids=np.concatenate([np.full(len(t.actions), t.head, dtype=np.int64) for t in targets]),
        value_targets=np.concatenate([t.value_targets for t in targets]),
        advantages=np.concatenate([t.advantages for t in targets]),
        entropy_cost=settings.entropy_cost,
        baseline_cost=settings.baseline_cost,
    )


def _all_finite(targets: Sequence[_RolloutTargets]) -> bool:
    arrays = [a for t in targets for a in (t.vtrace_returns, t.value_targets, t.advantages)]
    return all(np.all(np.isfinite(a)) for a in arrays)


def _skipped(params: NetworkParams, stats: TaskStatsVector, staleness: float, frames: int) -> StepOutcome:
    log.warning("skipping learner step at version %d: non-finite value targets", params.version)
    nan = float("nan")
    metrics = StepMetrics(nan, nan, nan, nan, preserve_error=0.0, staleness=staleness, frames=frames, skipped=True)
    return StepOutcome(params=params, stats=stats, metrics=metrics)


def _update_stats(stats: TaskStatsVector, targets: Sequence[_RolloutTargets]) -> TaskStatsVector:
    for t in targets:
        stats = stats.replace(t.task_id, update_stats_from_rollout(stats[t.task_id], t.vtrace_returns))
    return stats


def _head_stats(stats: TaskStatsVector, agent: AgentConfig, n_heads: int) -> TaskStatsVector:
    """Statistics indexed by value head (identity for the shared head)."""
    if agent.per_task_heads:
        return stats
    return TaskStatsVector(stats=stats.stats[:n_heads])


def _preserve(
    params: NetworkParams,
    old: TaskStatsVector,
    new: TaskStatsVector,
    agent: AgentConfig,
    probe: NDArray[np.float64],
) -> tuple[NetworkParams, float]:
    """Output-preserving rescale of changed heads; also returns the audit error on `probe` observations."""
    if old == new:
        return params, 0.0
    old_h = _head_stats(old, agent, params.n_heads)
    new_h = _head_stats(new, agent, params.n_heads)
    _, before, _ = forward_batch(params, probe)
    value_w, value_b = preserve_heads(params.value_w, params.value_b, old_h, new_h)
    preserved = replace(params, value_w=value_w, value_b=value_b)
    _, after, _ = forward_batch(preserved, probe)
    v_before = before * old_h.sigmas() + old_h.mus()
    v_after = after * new_h.sigmas() + new_h.mus()
    return preserved, float(np.max(np.abs(v_before - v_after)))


def _gradient_update(
    params: NetworkParams,
    targets: Sequence[_RolloutTargets],
    optimizer: RMSPropState,
    settings: LearnerSettings,
) -> tuple[NetworkParams, LossComponents | None, float]:
    grads, losses = compute_gradients(params, _loss_inputs(targets, settings))
    if not math.isfinite(losses.total):
        log.warning("skipping learner step at version %d: non-finite loss %r", params.version, losses.total)
        return params, None, float("nan")
    new_params, report = rmsprop_step(
        params,
        grads,
        optimizer,
        lr=settings.learning_rate,
        decay=settings.rmsprop_decay,
        epsilon=settings.rmsprop_epsilon,
        max_grad_norm=settings.max_grad_norm,
    )
    return new_params, (losses if report.applied else None), report.grad_norm


def learner_step(
    batch: Sequence[Rollout],
    params: NetworkParams,
    stats: TaskStatsVector,
    optimizer: RMSPropState,
    agent: AgentConfig,
    settings: LearnerSettings,
) -> StepOutcome:
    """One learner update from B rollouts. `optimizer` is the learner's own state and is updated in place.

    Non-finite targets skip the whole step: params, statistics and the
    optimizer come back unchanged. A non-finite loss or gradient skips only
    the parameter update. Either way the metrics are flagged `skipped`.
    """
    if not batch:
        raise ValueError("learner_step needs at least one rollout")
    staleness = float(np.mean([params.version - r.params_version for r in batch]))
    frames = sum(len(r) for r in batch)
    probe = np.concatenate([r.observations for r in batch])
    with np.errstate(over="ignore", invalid="ignore"):
        targets = [_targets_for(r, params, stats, agent) for r in batch]
    if not _all_finite(targets):
        return _skipped(params, stats, staleness, frames)

    if settings.update_order == "stats_first":
        new_stats = _update_stats(stats, targets) if agent.adapt_stats else stats
        preserved, preserve_error = _preserve(params, stats, new_stats, agent, probe)
        with np.errstate(over="ignore", invalid="ignore"):
            targets = [_targets_for(r, preserved, new_stats, agent) for r in batch]
        if not _all_finite(targets):
            return _skipped(params, stats, staleness, frames)
        params, losses, grad_norm = _gradient_update(preserved, targets, optimizer, settings)
    else:
        params, losses, grad_norm = _gradient_update(params, targets, optimizer, settings)
        new_stats = _update_stats(stats, targets) if agent.adapt_stats else stats
        params, preserve_error = _preserve(params, stats, new_stats, agent, probe)

    metrics = StepMetrics(
        policy_loss=losses.policy if losses else float("nan"),
        value_loss=losses.value if losses else float("nan"),
        entropy=losses.entropy if losses else float("nan"),
        grad_norm=grad_norm,
        preserve_error=preserve_error,
        staleness=staleness,
        frames=frames,
        skipped=losses is None,
    )
    return StepOutcome(params=params, stats=new_stats, metrics=metrics)
