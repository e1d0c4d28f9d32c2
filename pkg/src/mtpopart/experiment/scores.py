"""Normalized scores and their aggregates."""

from __future__ import annotations

import statistics
from collections.abc import Sequence
from dataclasses import dataclass

CAP = 1.0


class UndefinedNormalizationError(ValueError):
    """Random and optimal references coincide, so no score scale exists."""


@dataclass(frozen=True, slots=True)
class ScoreRecord:
    task_id: int
    raw_return: float
    random_ref: float
    optimal_ref: float
    normalized: float
    capped: float


def normalized_score(raw: float, random_ref: float, optimal_ref: float) -> float:
    if optimal_ref == random_ref:
        raise UndefinedNormalizationError(f"random and optimal references are both {random_ref}")
    return (raw - random_ref) / (optimal_ref - random_ref)


def capped(score: float) -> float:
    return min(score, CAP)


def score_record(task_id: int, raw: float, random_ref: float, optimal_ref: float) -> ScoreRecord:
    norm = normalized_score(raw, random_ref, optimal_ref)
    return ScoreRecord(task_id, raw, random_ref, optimal_ref, norm, capped(norm))


def aggregate(records: Sequence[ScoreRecord]) -> tuple[float, float]:
    """(median normalized score, mean capped score)."""
    if not records:
        raise ValueError("cannot aggregate zero score records")
    median = statistics.median(r.normalized for r in records)
    mean_capped = statistics.fmean(r.capped for r in records)
    return float(median), float(mean_capped)
