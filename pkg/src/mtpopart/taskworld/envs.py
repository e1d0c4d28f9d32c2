"""Episodic environments for the synthetic task families.

chain       states 0..L-1, start 0, goal L-1; right (1) advances, left (0)
            retreats with a floor at 0, up/down (2, 3) are no-ops.
grid        W x H cells, start (0,0), goal (W-1,H-1); four moves, the border
            and interior walls block movement.
dense_walk  L positions on a ring moved by left/right; every step pays
            scale * Bernoulli(p) regardless of action; the episode lasts
            exactly episode_cap steps.

Rewards are multiplied by reward_scale, then passed through the task's
transform. Observations are one-hot over the suite's ObservationLayout and
never carry the task id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from mtpopart.taskworld.specs import N_ACTIONS, Suite, TaskSpec, Transform

DENSE_SHAPING = 0.1  # fraction of reward_scale paid per step that gets closer to the goal


class EpisodeFinishedError(RuntimeError):
    """step() called after the episode terminated; reset() first."""


def transform_reward(r: float, transform: Transform) -> float:
    if transform == "clip":
        return min(max(r, -1.0), 1.0)
    if transform == "oar":
        t = math.tanh(r)
        return -0.3 * min(t, 0.0) + 5.0 * max(t, 0.0)
    return r


@dataclass(frozen=True, slots=True)
class ObservationLayout:
    """One one-hot block per distinct (family, size) in a suite."""

    offsets: dict[tuple[str, int, int], int]
    dim: int

    @classmethod
    def for_suite(cls, suite: Suite) -> ObservationLayout:
        offsets: dict[tuple[str, int, int], int] = {}
        dim = 0
        for task in suite.tasks:
            if task.shape_key not in offsets:
                offsets[task.shape_key] = dim
                dim += task.n_states
        return cls(offsets=offsets, dim=dim)

    def encode(self, spec: TaskSpec, state_index: int) -> NDArray[np.float64]:
        obs = np.zeros(self.dim)
        obs[self.offsets[spec.shape_key] + state_index] = 1.0
        return obs


# --- transition model (shared with the oracles) ---


def start_state(spec: TaskSpec) -> int:
    return 0


def is_goal(spec: TaskSpec, state: int) -> bool:
    if spec.family == "dense_walk":
        return False
    return state == spec.n_states - 1


def _goal_distance(spec: TaskSpec, state: int) -> int:
    if spec.family == "grid":
        x, y = state % spec.width, state // spec.width
        return (spec.width - 1 - x) + (spec.height - 1 - y)
    return spec.n_states - 1 - state


def next_state(spec: TaskSpec, state: int, action: int) -> int:
    if spec.family == "chain":
        if action == 1:
            return min(state + 1, spec.length - 1)
        if action == 0:
            return max(state - 1, 0)
        return state
    if spec.family == "dense_walk":
        if action == 1:
            return (state + 1) % spec.length
        if action == 0:
            return (state - 1) % spec.length
        return state
    x, y = state % spec.width, state // spec.width
    dx, dy = ((-1, 0), (1, 0), (0, -1), (0, 1))[action]
    nx, ny = x + dx, y + dy
    if not (0 <= nx < spec.width and 0 <= ny < spec.height) or (nx, ny) in spec.walls:
        return state
    return ny * spec.width + nx


def raw_reward(spec: TaskSpec, state: int, new_state: int) -> float:
    """Deterministic part of the unscaled reward for chain and grid transitions."""
    reward = 1.0 if is_goal(spec, new_state) else 0.0
    if spec.sparsity == "dense" and _goal_distance(spec, new_state) < _goal_distance(spec, state):
        reward += DENSE_SHAPING
    return reward


@dataclass(frozen=True, slots=True)
class StepResult:
    observation: NDArray[np.float64]
    reward: float  # scaled and transformed
    terminated: bool
    raw_reward: float  # scaled, untransformed


@dataclass(slots=True)
class EnvInstance:
    spec: TaskSpec
    layout: ObservationLayout
    seed: int = 0
    state: int = 0
    steps: int = 0
    done: bool = True
    rng: np.random.Generator = field(init=False)

    def __post_init__(self) -> None:
        self.rng = np.random.default_rng(self.seed)

    def observe(self) -> NDArray[np.float64]:
        return self.layout.encode(self.spec, self.state)


def reset(env: EnvInstance) -> NDArray[np.float64]:
    env.state = start_state(env.spec)
    env.steps = 0
    env.done = False
    return env.observe()


def step(env: EnvInstance, action: int) -> StepResult:
    if env.done:
        raise EpisodeFinishedError(f"task {env.spec.task_id}: episode already terminated")
    if not 0 <= action < N_ACTIONS:
        raise ValueError(f"action {action} outside 0..{N_ACTIONS - 1}")
    spec = env.spec
    new_state = next_state(spec, env.state, action)
    env.steps += 1
    at_cap = env.steps >= spec.episode_cap

    if spec.family == "dense_walk":
        paid = spec.sparsity == "dense" or at_cap
        raw = float(env.rng.random() < spec.p) if paid else 0.0
    else:
        raw = raw_reward(spec, env.state, new_state)

    scaled = spec.reward_scale * raw
    env.state = new_state
    env.done = is_goal(spec, new_state) or at_cap
    return StepResult(
        observation=env.observe(),
        reward=transform_reward(scaled, spec.transform),
        terminated=env.done,
        raw_reward=scaled,
    )


def make_envs(suite: Suite, seed: int) -> list[EnvInstance]:
    layout = ObservationLayout.for_suite(suite)
    seeds = np.random.SeedSequence(seed).generate_state(len(suite))
    return [EnvInstance(spec=t, layout=layout, seed=int(s)) for t, s in zip(suite.tasks, seeds, strict=True)]
