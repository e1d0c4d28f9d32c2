"""Rollouts and the bounded queue that carries them from actors to the learner."""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


class QueueClosed(RuntimeError):
    """The queue was closed; producers stop and the consumer drains."""


@dataclass(frozen=True, slots=True)
class Rollout:
    task_id: int
    observations: NDArray[np.float64]  # (n+1, D); last row is the bootstrap observation
    actions: NDArray[np.int64]  # (n,)
    rewards: NDArray[np.float64]  # (n,) transformed training rewards
    behavior_logp: NDArray[np.float64]  # (n,)
    discounts: NDArray[np.float64]  # (n,) 0 at terminations, else gamma
    actor_id: int
    params_version: int
    episode_returns: tuple[float, ...] = ()  # undiscounted raw returns of episodes that ended here

    def __len__(self) -> int:
        return self.actions.shape[0]


class RolloutQueue:
    """Bounded FIFO, many producers and one consumer. Full queue blocks producers.

    Accounting: enqueued == consumed + discarded once the queue has been
    closed and drained.
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError(f"queue capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: deque[Rollout] = deque()
        self._mutex = threading.Lock()
        self._not_empty = threading.Condition(self._mutex)
        self._not_full = threading.Condition(self._mutex)
        self._closed = False
        self.enqueued = 0
        self.consumed = 0
        self.discarded = 0

    @property
    def closed(self) -> bool:
        return self._closed

    def put(self, rollout: Rollout) -> None:
        with self._not_full:
            while not self._closed and len(self._items) >= self.capacity:
                self._not_full.wait()
            if self._closed:
                raise QueueClosed("rollout queue is closed")
            self._items.append(rollout)
            self.enqueued += 1
            self._not_empty.notify()

    def get(self, timeout: float | None = None) -> Rollout:
        """Blocks until an item arrives. Raises QueueClosed once closed and empty, TimeoutError on timeout."""
        with self._not_empty:
            while not self._items:
                if self._closed:
                    raise QueueClosed("rollout queue is closed and drained")
                if not self._not_empty.wait(timeout=timeout):
                    raise TimeoutError("no rollout arrived in time")
            item = self._items.popleft()
            self.consumed += 1
            self._not_full.notify()
            return item

    def get_batch(self, size: int, timeout: float | None = None) -> list[Rollout]:
        return [self.get(timeout=timeout) for _ in range(size)]

    def close(self) -> None:
        with self._mutex:
            self._closed = True
            self._not_empty.notify_all()
            self._not_full.notify_all()

    def drain(self) -> int:
        """Discard whatever is left; returns how many were dropped."""
        with self._mutex:
            dropped = len(self._items)
            self._items.clear()
            self.discarded += dropped
            self._not_full.notify_all()
            return dropped

    def __len__(self) -> int:
        with self._mutex:
            return len(self._items)
