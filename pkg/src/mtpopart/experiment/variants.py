"""Agent variants compared in ablations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

Variant = Literal["popart", "multihead", "baseline"]
VARIANTS: tuple[Variant, ...] = ("popart", "multihead", "baseline")


@dataclass(frozen=True, slots=True)
class AgentConfig:
    variant: Variant
    per_task_heads: bool  # False: one shared value head, task id ignored by the value path
    adapt_stats: bool  # False: statistics frozen at mu=0, sigma=1; no output preservation

    def n_heads(self, n_tasks: int) -> int:
        return n_tasks if self.per_task_heads else 1

    def head_for(self, task_id: int) -> int:
        return task_id if self.per_task_heads else 0


def make_agent_config(variant: str) -> AgentConfig:
    if variant == "popart":
        return AgentConfig(variant="popart", per_task_heads=True, adapt_stats=True)
    if variant == "multihead":
        return AgentConfig(variant="multihead", per_task_heads=True, adapt_stats=False)
    if variant == "baseline":
        return AgentConfig(variant="baseline", per_task_heads=False, adapt_stats=False)
    raise ValueError(f"unknown variant {variant!r}; expected one of: {', '.join(VARIANTS)}")
