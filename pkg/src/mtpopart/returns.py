"""V-trace value targets and policy-gradient targets.

All inputs are in unnormalized reward units. Episode terminations inside a
rollout are encoded as zero discounts, so a fixed-length rollout may span
several episodes.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

log = logging.getLogger(__name__)

RATIO_CAP = 1e6
_LOG_RATIO_CAP = math.log(RATIO_CAP)

_overflow_count = 0


class VTraceError(ValueError):
    def __init__(self, message: str, index: int | None = None) -> None:
        super().__init__(message)
        self.index = index


def ratio_overflow_count() -> int:
    """Number of importance ratios saturated at RATIO_CAP since the last reset."""
    return _overflow_count


def reset_ratio_overflow_count() -> None:
    global _overflow_count
    _overflow_count = 0


def importance_ratio(target_logp: float, behavior_logp: float) -> float:
    """pi/mu computed in log space; saturates at RATIO_CAP instead of overflowing."""
    global _overflow_count
    diff = target_logp - behavior_logp
    if diff > _LOG_RATIO_CAP:
        _overflow_count += 1
        log.warning("importance ratio exp(%.3g) saturated at %g", diff, RATIO_CAP)
        return RATIO_CAP
    return math.exp(diff)


def clipped_ratio(target_logp: float, behavior_logp: float) -> float:
    """min(1, rho); a NaN ratio passes through unclipped."""
    rho = importance_ratio(target_logp, behavior_logp)
    return 1.0 if rho > 1.0 else rho


@dataclass(frozen=True, slots=True)
class VTraceInputs:
    rewards: NDArray[np.float64]
    values: NDArray[np.float64]  # one longer than rewards: v(S_t) .. v(S_{t+n})
    target_logp: NDArray[np.float64]
    behavior_logp: NDArray[np.float64]
    discounts: NDArray[np.float64]

    @classmethod
    def of(
        cls,
        rewards: Sequence[float],
        values: Sequence[float],
        target_logp: Sequence[float],
        behavior_logp: Sequence[float],
        discounts: Sequence[float],
    ) -> VTraceInputs:
        return cls(
            rewards=np.asarray(rewards, dtype=np.float64),
            values=np.asarray(values, dtype=np.float64),
            target_logp=np.asarray(target_logp, dtype=np.float64),
            behavior_logp=np.asarray(behavior_logp, dtype=np.float64),
            discounts=np.asarray(discounts, dtype=np.float64),
        )


@dataclass(frozen=True, slots=True)
class VTraceOutputs:
    vtrace_returns: NDArray[np.float64]
    policy_targets: NDArray[np.float64]


def _check_shapes(inp: VTraceInputs) -> int:
    n = inp.rewards.shape[0] if inp.rewards.ndim == 1 else -1
    if n < 1:
        raise VTraceError(f"rewards must be a non-empty 1-D sequence, got shape {inp.rewards.shape}")
    for name in ("target_logp", "behavior_logp", "discounts"):
        arr = getattr(inp, name)
        if arr.shape != (n,):
            raise VTraceError(f"{name} has shape {arr.shape}, expected ({n},)")
    if inp.values.shape != (n + 1,):
        raise VTraceError(f"values has shape {inp.values.shape}, expected ({n + 1},) (one bootstrap value)")
    return n


def compute_vtrace(inp: VTraceInputs) -> VTraceOutputs:
    """G_t = v_t + sum_k (prod_{j<k} gamma_j)(prod_{i=t..k} c_i) delta_k, computed backwards.

    The product of clipped ratios includes c_k on delta_k. Policy targets are
    R_{t+1} + gamma_t * G_{t+1}; the last position bootstraps on v(S_{t+n}).
    """
    n = _check_shapes(inp)
    clipped = np.empty(n)
    for k in range(n):
        c = clipped_ratio(float(inp.target_logp[k]), float(inp.behavior_logp[k]))
        if not math.isfinite(c):
            raise VTraceError(f"non-finite importance ratio {c!r} at index {k}", index=k)
        clipped[k] = c

    values = inp.values
    deltas = inp.rewards + inp.discounts * values[1:] - values[:-1]
    corrections = np.empty(n)
    acc = 0.0
    for k in range(n - 1, -1, -1):
        acc = clipped[k] * (deltas[k] + inp.discounts[k] * acc)
        corrections[k] = acc
    vtrace_returns = values[:-1] + corrections

    next_returns = np.append(vtrace_returns[1:], values[n])
    policy_targets = inp.rewards + inp.discounts * next_returns
    return VTraceOutputs(vtrace_returns=vtrace_returns, policy_targets=policy_targets)


def nstep_returns(
    rewards: Sequence[float] | NDArray[np.float64],
    values: Sequence[float] | NDArray[np.float64],
    discounts: Sequence[float] | NDArray[np.float64],
) -> NDArray[np.float64]:
    """Bootstrapped on-policy returns R_{t+1} + gamma_t R_{t+2} + ... + (prod gamma) v(S_{t+n})."""
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    d = np.asarray(discounts, dtype=np.float64)
    out = np.empty_like(r)
    acc = float(v[-1])
    for k in range(r.shape[0] - 1, -1, -1):
        acc = r[k] + d[k] * acc
        out[k] = acc
    return out
