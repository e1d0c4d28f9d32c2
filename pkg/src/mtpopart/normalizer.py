"""PopArt statistics: per-task return moments and output-preserving head updates.

Values are parameterized as v(s) = sigma * n(s) + mu, where n(s) is the
normalized linear head output. Statistics are exponential moving averages of
the first and second moments of value targets; sigma is always derived,
clamped, and never stored.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

DEFAULT_BETA = 3e-4
SIGMA_LO = 1e-4
SIGMA_HI = 1e6


class StatsPoisoningError(ValueError):
    """A non-finite target would corrupt the running moments."""


@dataclass(frozen=True, slots=True)
class NormStats:
    mu: float = 0.0
    nu: float = 1.0  # mu=0, nu=1 -> sigma=1: identity normalization at start
    beta: float = DEFAULT_BETA
    sigma_lo: float = SIGMA_LO
    sigma_hi: float = SIGMA_HI

    @property
    def sigma(self) -> float:
        # EMA rounding can leave nu slightly below mu**2
        variance = max(self.nu - self.mu * self.mu, 0.0)
        return min(max(math.sqrt(variance), self.sigma_lo), self.sigma_hi)


def update_stats(stats: NormStats, target: float) -> NormStats:
    if not math.isfinite(target):
        raise StatsPoisoningError(f"non-finite value target {target!r}")
    b = stats.beta
    return replace(
        stats,
        mu=(1.0 - b) * stats.mu + b * target,
        nu=(1.0 - b) * stats.nu + b * target * target,
    )


def update_stats_from_rollout(stats: NormStats, targets: Sequence[float] | NDArray[np.float64]) -> NormStats:
    """One online update per rollout: mu tracks mean(G), nu tracks mean(G**2)."""
    arr = np.asarray(targets, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot update statistics from an empty rollout")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise StatsPoisoningError(f"non-finite value target {arr[bad]!r} at position {bad}")
    if np.all(arr == arr[0]):
        # mean() of a constant can drift by an ulp
        return update_stats(stats, float(arr[0]))
    b = stats.beta
    return replace(
        stats,
        mu=(1.0 - b) * stats.mu + b * float(np.mean(arr)),
        nu=(1.0 - b) * stats.nu + b * float(np.mean(arr * arr)),
    )


def normalize(g: float, stats: NormStats) -> float:
    return (g - stats.mu) / stats.sigma


def denormalize(n: float, stats: NormStats) -> float:
    return stats.sigma * n + stats.mu


def preserve_outputs(
    w_row: NDArray[np.float64], b: float, old: NormStats, new: NormStats
) -> tuple[NDArray[np.float64], float]:
    """Rescale one head so sigma' * (w'.f + b') + mu' == sigma * (w.f + b) + mu for every f."""
    if old == new:
        return w_row, b
    sigma, sigma_new = old.sigma, new.sigma
    return (sigma / sigma_new) * w_row, (sigma * b + old.mu - new.mu) / sigma_new


@dataclass(frozen=True, slots=True)
class TaskStatsVector:
    stats: tuple[NormStats, ...]

    @classmethod
    def initial(
        cls,
        n_tasks: int,
        *,
        beta: float = DEFAULT_BETA,
        sigma_lo: float = SIGMA_LO,
        sigma_hi: float = SIGMA_HI,
    ) -> TaskStatsVector:
        if n_tasks < 1:
            raise ValueError("need at least one task")
        one = NormStats(beta=beta, sigma_lo=sigma_lo, sigma_hi=sigma_hi)
        return cls(stats=(one,) * n_tasks)

    def __len__(self) -> int:
        return len(self.stats)

    def __getitem__(self, task_id: int) -> NormStats:
        if not 0 <= task_id < len(self.stats):
            raise IndexError(f"no statistics for task {task_id} (have {len(self.stats)})")
        return self.stats[task_id]

    def replace(self, task_id: int, new: NormStats) -> TaskStatsVector:
        self[task_id]  # bounds check
        items = list(self.stats)
        items[task_id] = new
        return TaskStatsVector(stats=tuple(items))

    def mus(self) -> NDArray[np.float64]:
        return np.array([s.mu for s in self.stats])

    def sigmas(self) -> NDArray[np.float64]:
        return np.array([s.sigma for s in self.stats])


def preserve_heads(
    weights: NDArray[np.float64],
    biases: NDArray[np.float64],
    old: TaskStatsVector,
    new: TaskStatsVector,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Multi-task form: row i of (W, b) is rescaled only when task i's statistics moved."""
    if len(old) != len(new) or weights.shape[0] != len(old):
        raise ValueError(f"head count {weights.shape[0]} does not match statistics ({len(old)} -> {len(new)})")
    w_out = weights.copy()
    b_out = biases.copy()
    for i, (before, after) in enumerate(zip(old.stats, new.stats, strict=True)):
        if before == after:
            continue
        w_out[i], b_out[i] = preserve_outputs(weights[i], float(biases[i]), before, after)
    return w_out, b_out
