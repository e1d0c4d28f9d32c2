"""Task-agnostic policy and N-headed normalized value network.

One fully-connected hidden layer feeds a policy head (logits over the shared
action set) and a value matrix whose row i is task i's normalized value head.
Gradients are derived by hand; `total_loss` is the scalar they differentiate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from mtpopart.normalizer import NormStats

log = logging.getLogger(__name__)

Activation = Literal["tanh", "identity"]
PARAM_NAMES = ("trunk_w", "trunk_b", "policy_w", "policy_b", "value_w", "value_b")

Array = NDArray[np.float64]


class ShapeError(ValueError):
    """Input or parameter dimensions do not line up."""


class TaskIdError(ValueError):
    """A sample refers to a value head that does not exist."""


@dataclass(frozen=True, slots=True)
class NetworkParams:
    trunk_w: Array  # (H, D)
    trunk_b: Array  # (H,)
    policy_w: Array  # (A, H)
    policy_b: Array  # (A,)
    value_w: Array  # (N, H)
    value_b: Array  # (N,)
    version: int = 0
    activation: Activation = "tanh"

    @property
    def obs_dim(self) -> int:
        return self.trunk_w.shape[1]

    @property
    def n_actions(self) -> int:
        return self.policy_w.shape[0]

    @property
    def n_heads(self) -> int:
        return self.value_w.shape[0]

    def arrays(self) -> dict[str, Array]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


@dataclass(frozen=True, slots=True)
class Gradients:
    trunk_w: Array
    trunk_b: Array
    policy_w: Array
    policy_b: Array
    value_w: Array
    value_b: Array

    def arrays(self) -> dict[str, Array]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def scaled(self, factor: float) -> Gradients:
        return Gradients(**{k: v * factor for k, v in self.arrays().items()})


def init_params(
    obs_dim: int,
    n_actions: int,
    n_heads: int,
    rng: np.random.Generator,
    *,
    hidden: int = 64,
    activation: Activation = "tanh",
) -> NetworkParams:
    """Trunk uniform in +-1/sqrt(fan_in); heads zero so initial values are 0 and the policy uniform."""
    bound = 1.0 / math.sqrt(obs_dim)
    return NetworkParams(
        trunk_w=rng.uniform(-bound, bound, size=(hidden, obs_dim)),
        trunk_b=rng.uniform(-bound, bound, size=hidden),
        policy_w=np.zeros((n_actions, hidden)),
        policy_b=np.zeros(n_actions),
        value_w=np.zeros((n_heads, hidden)),
        value_b=np.zeros(n_heads),
        activation=activation,
    )


def _activate(z: Array, activation: Activation) -> Array:
    return np.tanh(z) if activation == "tanh" else z


def log_softmax(logits: Array) -> Array:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def softmax(logits: Array) -> Array:
    return np.exp(log_softmax(logits))


def entropy(logits: Array) -> float | Array:
    """Shannon entropy (nats) of softmax(logits); vectorized over leading axes."""
    logp = log_softmax(np.asarray(logits, dtype=np.float64))
    h = -np.sum(np.exp(logp) * logp, axis=-1)
    return float(h) if np.ndim(h) == 0 else h


def forward_batch(params: NetworkParams, obs: Array) -> tuple[Array, Array, Array]:
    """Returns (logits (B, A), normalized values (B, N), hidden (B, H)) for observations (B, D)."""
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    if obs.shape[1] != params.obs_dim:
        raise ShapeError(f"observation has {obs.shape[1]} features, trunk expects {params.obs_dim}")
    hidden = _activate(obs @ params.trunk_w.T + params.trunk_b, params.activation)
    logits = hidden @ params.policy_w.T + params.policy_b
    values = hidden @ params.value_w.T + params.value_b
    return logits, values, hidden


def forward(params: NetworkParams, obs: Array) -> tuple[Array, Array]:
    """Single observation -> (logits over actions, normalized value per head). Never sees task ids."""
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim != 1:
        raise ShapeError(f"forward takes one feature vector, got shape {obs.shape}")
    logits, values, _ = forward_batch(params, obs[None, :])
    return logits[0], values[0]


def normalized_coefficient(g_pi: float, stats: NormStats, n_value: float) -> float:
    return (g_pi - stats.mu) / stats.sigma - n_value


@dataclass(frozen=True, slots=True)
class LossInputs:
    observations: Array  # (B, D)
    actions: NDArray[np.int64]  # (B,)
    task_ids: NDArray[np.int64]  # (B,) value head per sample
    value_targets: Array  # (B,) normalized
    advantages: Array  # (B,) normalized policy coefficients, treated as constants
    entropy_cost: float
    baseline_cost: float = 0.5

    def __len__(self) -> int:
        return self.actions.shape[0]


@dataclass(frozen=True, slots=True)
class LossComponents:
    policy: float
    value: float
    entropy: float
    total: float


def _check_batch(params: NetworkParams, batch: LossInputs) -> None:
    if len(batch) == 0:
        raise ValueError("empty loss batch")
    bad = (batch.task_ids < 0) | (batch.task_ids >= params.n_heads)
    if np.any(bad):
        raise TaskIdError(f"task id {int(batch.task_ids[bad][0])} has no value head (heads: {params.n_heads})")
    bad_a = (batch.actions < 0) | (batch.actions >= params.n_actions)
    if np.any(bad_a):
        raise ShapeError(f"action {int(batch.actions[bad_a][0])} outside 0..{params.n_actions - 1}")
    if not (np.all(np.isfinite(batch.value_targets)) and np.all(np.isfinite(batch.advantages))):
        raise ValueError("non-finite targets in loss batch")


def _losses(params: NetworkParams, batch: LossInputs) -> tuple[LossComponents, dict[str, Array]]:
    logits, values, hidden = forward_batch(params, batch.observations)
    rows = np.arange(len(batch))
    logp = log_softmax(logits)
    probs = np.exp(logp)
    head_values = values[rows, batch.task_ids]
    value_err = batch.value_targets - head_values
    ent = -np.sum(probs * logp, axis=1)

    policy_loss = float(-np.sum(batch.advantages * logp[rows, batch.actions]))
    value_loss = float(0.5 * np.sum(value_err * value_err))
    entropy_sum = float(np.sum(ent))
    total = policy_loss + batch.baseline_cost * value_loss - batch.entropy_cost * entropy_sum
    cache = {"logp": logp, "probs": probs, "hidden": hidden, "value_err": value_err, "entropy": ent}
    return LossComponents(policy=policy_loss, value=value_loss, entropy=entropy_sum, total=total), cache


def total_loss(params: NetworkParams, batch: LossInputs) -> float:
    _check_batch(params, batch)
    components, _ = _losses(params, batch)
    return components.total


def compute_gradients(params: NetworkParams, batch: LossInputs) -> tuple[Gradients, LossComponents]:
    """Gradient of sum_b [-adv*log pi(a|s) + c_v * 0.5 (t - n_i)^2 - c_e * H(pi)].

    Only the sampled task's head receives value gradient; advantages carry no
    gradient into the value path. Every term, the entropy bonus included, is
    summed over the batch rather than averaged, so learning rate and entropy
    cost are per-sample quantities.
    """
    _check_batch(params, batch)
    components, cache = _losses(params, batch)
    rows = np.arange(len(batch))
    probs, logp, hidden = cache["probs"], cache["logp"], cache["hidden"]

    onehot = np.zeros_like(probs)
    onehot[rows, batch.actions] = 1.0
    d_logits = -batch.advantages[:, None] * (onehot - probs)
    # dH/dl_j = -p_j (log p_j + H)
    d_logits += batch.entropy_cost * probs * (logp + cache["entropy"][:, None])

    d_values = np.zeros((len(batch), params.n_heads))
    d_values[rows, batch.task_ids] = -batch.baseline_cost * cache["value_err"]

    d_hidden = d_logits @ params.policy_w + d_values @ params.value_w
    d_pre = d_hidden * (1.0 - hidden * hidden) if params.activation == "tanh" else d_hidden

    grads = Gradients(
        trunk_w=d_pre.T @ batch.observations,
        trunk_b=d_pre.sum(axis=0),
        policy_w=d_logits.T @ hidden,
        policy_b=d_logits.sum(axis=0),
        value_w=d_values.T @ hidden,
        value_b=d_values.sum(axis=0),
    )
    return grads, components


def global_norm(grads: Gradients) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.arrays().values()))


@dataclass(slots=True)
class RMSPropState:
    """Per-parameter squared-gradient accumulators. Lives on the learner only."""

    accumulators: dict[str, Array] = field(default_factory=dict)
    rejected_steps: int = 0

    @classmethod
    def zeros_like(cls, params: NetworkParams) -> RMSPropState:
        return cls(accumulators={k: np.zeros_like(v) for k, v in params.arrays().items()})

    def copy(self) -> RMSPropState:
        return RMSPropState({k: v.copy() for k, v in self.accumulators.items()}, self.rejected_steps)


@dataclass(frozen=True, slots=True)
class StepReport:
    grad_norm: float  # before clipping
    applied: bool


def rmsprop_step(
    params: NetworkParams,
    grads: Gradients,
    state: RMSPropState,
    *,
    lr: float,
    decay: float = 0.99,
    epsilon: float = 1e-5,
    max_grad_norm: float = 40.0,
) -> tuple[NetworkParams, StepReport]:
    """Clip by global norm, then m' = decay*m + (1-decay)*g^2 and p -= lr*g/sqrt(m'+eps).

    Zero momentum. Epsilon sits inside the square root. Mutates `state` in
    place; a non-finite gradient leaves both params and state untouched.
    """
    if lr <= 0 or not 0 <= decay < 1 or epsilon <= 0:
        raise ValueError(f"invalid RMSProp settings lr={lr} decay={decay} epsilon={epsilon}")
    norm = global_norm(grads)
    if not math.isfinite(norm):
        state.rejected_steps += 1
        log.warning("rejected optimizer step: non-finite gradient (%d rejected so far)", state.rejected_steps)
        return params, StepReport(grad_norm=norm, applied=False)
    if norm > max_grad_norm:
        grads = grads.scaled(max_grad_norm / norm)

    if not state.accumulators:
        state.accumulators = {k: np.zeros_like(v) for k, v in params.arrays().items()}
    updated: dict[str, Array] = {}
    for name, g in grads.arrays().items():
        m = decay * state.accumulators[name] + (1.0 - decay) * g * g
        state.accumulators[name] = m
        updated[name] = getattr(params, name) - lr * g / np.sqrt(m + epsilon)
    return replace(params, **updated, version=params.version + 1), StepReport(grad_norm=norm, applied=True)
