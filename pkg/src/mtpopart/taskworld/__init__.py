"""Taskworld: synthetic multi-task suites with a shared action set and exact oracles."""

from mtpopart.taskworld.envs import (
    EnvInstance,
    EpisodeFinishedError,
    ObservationLayout,
    StepResult,
    make_envs,
    reset,
    step,
    transform_reward,
)
from mtpopart.taskworld.oracles import (
    OracleRow,
    RandomReference,
    cache_key,
    greedy_oracle_policy,
    oracle_cache,
    oracle_optimal_return,
    oracle_random_return,
)
from mtpopart.taskworld.specs import (
    BUILTIN_SUITES,
    N_ACTIONS,
    Suite,
    TaskSpec,
    builtin_suite,
    load_suite,
    parse_suite,
)

__all__ = [
    "BUILTIN_SUITES",
    "N_ACTIONS",
    "EnvInstance",
    "EpisodeFinishedError",
    "ObservationLayout",
    "OracleRow",
    "RandomReference",
    "StepResult",
    "Suite",
    "TaskSpec",
    "builtin_suite",
    "cache_key",
    "greedy_oracle_policy",
    "load_suite",
    "make_envs",
    "oracle_cache",
    "oracle_optimal_return",
    "oracle_random_return",
    "parse_suite",
    "reset",
    "step",
    "transform_reward",
]
