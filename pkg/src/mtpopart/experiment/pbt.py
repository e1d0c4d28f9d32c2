"""Population-based training: sampling, exploit and explore.

Fitness is the mean capped normalized score. Exploited members take over a
stronger member's checkpoint (weights, normalization statistics and optimizer
state travel together) and hyperparameters, then perturb them.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from mtpopart.checkpoint import Checkpoint

log = logging.getLogger(__name__)

LEARNING_RATE_RANGE = (5e-6, 5e-3)  # log-uniform
ENTROPY_COST_RANGE = (5e-5, 1e-2)  # log-uniform
RMSPROP_EPSILONS = (1e-1, 1e-3, 1e-5, 1e-7)  # categorical
MAX_GRAD_NORM_RANGE = (10.0, 100.0)  # uniform

EXPLOIT_FRACTION = 0.25
PERTURB_FACTORS = (0.8, 1.25)


@dataclass(frozen=True, slots=True)
class Hyperparameters:
    learning_rate: float
    entropy_cost: float
    rmsprop_epsilon: float
    max_grad_norm: float


@dataclass(frozen=True, slots=True)
class PbtMember:
    member_id: int
    hyperparameters: Hyperparameters
    checkpoint: Checkpoint
    fitness: float | None = None  # None until the member is next evaluated
    parent_id: int | None = None


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def sample_hyperparameters(rng: np.random.Generator) -> Hyperparameters:
    return Hyperparameters(
        learning_rate=_log_uniform(rng, *LEARNING_RATE_RANGE),
        entropy_cost=_log_uniform(rng, *ENTROPY_COST_RANGE),
        rmsprop_epsilon=float(rng.choice(RMSPROP_EPSILONS)),
        max_grad_norm=float(rng.uniform(*MAX_GRAD_NORM_RANGE)),
    )


def in_support(hp: Hyperparameters) -> bool:
    return (
        LEARNING_RATE_RANGE[0] <= hp.learning_rate <= LEARNING_RATE_RANGE[1]
        and ENTROPY_COST_RANGE[0] <= hp.entropy_cost <= ENTROPY_COST_RANGE[1]
        and hp.rmsprop_epsilon in RMSPROP_EPSILONS
        and MAX_GRAD_NORM_RANGE[0] <= hp.max_grad_norm <= MAX_GRAD_NORM_RANGE[1]
    )


def _clamp(value: float, bounds: tuple[float, float]) -> float:
    return min(max(value, bounds[0]), bounds[1])


def perturb(hp: Hyperparameters, factors: Sequence[float], rng: np.random.Generator) -> Hyperparameters:
    """Multiply each continuous value by a factor drawn from `factors` (clamped to its support); resample epsilon."""

    def scaled(value: float, bounds: tuple[float, float]) -> float:
        return _clamp(value * float(rng.choice(factors)), bounds)

    return Hyperparameters(
        learning_rate=scaled(hp.learning_rate, LEARNING_RATE_RANGE),
        entropy_cost=scaled(hp.entropy_cost, ENTROPY_COST_RANGE),
        rmsprop_epsilon=float(rng.choice(RMSPROP_EPSILONS)),
        max_grad_norm=scaled(hp.max_grad_norm, MAX_GRAD_NORM_RANGE),
    )


def pbt_step(
    population: Sequence[PbtMember],
    rng: np.random.Generator,
    *,
    exploit_fraction: float = EXPLOIT_FRACTION,
    perturb_factors: Sequence[float] = PERTURB_FACTORS,
) -> list[PbtMember]:
    """Exploit-and-explore over an evaluated population; returns members in their original order."""
    if len(population) < 2:
        raise ValueError(f"population needs at least 2 members, got {len(population)}")
    if not 0 < exploit_fraction <= 0.5:
        raise ValueError(f"exploit_fraction must be in (0, 0.5], got {exploit_fraction}")
    unscored = [m.member_id for m in population if m.fitness is None]
    if unscored:
        raise ValueError(f"members {unscored} have no fitness; evaluate before pbt_step")

    k = max(1, math.floor(exploit_fraction * len(population)))
    # stable sort: ties keep population order
    ranked = sorted(range(len(population)), key=lambda i: population[i].fitness)  # type: ignore[arg-type,return-value]
    bottom, top = ranked[:k], ranked[-k:]

    result = list(population)
    for i in bottom:
        source = population[top[int(rng.integers(len(top)))]]
        member = population[i]
        result[i] = replace(
            member,
            hyperparameters=perturb(source.hyperparameters, perturb_factors, rng),
            checkpoint=replace(
                source.checkpoint,
                optimizer=source.checkpoint.optimizer.copy() if source.checkpoint.optimizer else None,
            ),
            fitness=None,
            parent_id=source.member_id,
        )
        log.info(
            "member %d (fitness %.4f) exploits member %d (fitness %.4f)",
            member.member_id,
            member.fitness,
            source.member_id,
            source.fitness,
        )
    return result
