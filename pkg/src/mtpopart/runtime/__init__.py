"""Runtime: actors, the rollout queue, the learner step and training runs."""

from mtpopart.runtime.actor import ActorState, SnapshotBox, actor_loop, generate_rollout
from mtpopart.runtime.learner import LearnerSettings, StepMetrics, StepOutcome, learner_step
from mtpopart.runtime.rollouts import QueueClosed, Rollout, RolloutQueue
from mtpopart.runtime.training import TrainingResult, run_training

__all__ = [
    "ActorState",
    "LearnerSettings",
    "QueueClosed",
    "Rollout",
    "RolloutQueue",
    "SnapshotBox",
    "StepMetrics",
    "StepOutcome",
    "TrainingResult",
    "actor_loop",
    "generate_rollout",
    "learner_step",
    "run_training",
]
