"""Experiment layer: scores, frozen-policy evaluation, agent variants and PBT."""

from mtpopart.experiment.evaluation import evaluate, frozen_policy
from mtpopart.experiment.pbt import Hyperparameters, PbtMember, in_support, pbt_step, sample_hyperparameters
from mtpopart.experiment.scores import (
    ScoreRecord,
    UndefinedNormalizationError,
    aggregate,
    capped,
    normalized_score,
)
from mtpopart.experiment.variants import VARIANTS, AgentConfig, make_agent_config

__all__ = [
    "VARIANTS",
    "AgentConfig",
    "Hyperparameters",
    "PbtMember",
    "ScoreRecord",
    "UndefinedNormalizationError",
    "aggregate",
    "capped",
    "evaluate",
    "frozen_policy",
    "in_support",
    "make_agent_config",
    "normalized_score",
    "pbt_step",
    "sample_hyperparameters",
]
