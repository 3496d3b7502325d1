"""Sharded ring-buffer replay"""

import threading
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import ConfigurationError, UsageError
from src.env.types import Transition
from src.logging_config.logger import setup_logger

logger = setup_logger(__name__)

WAIT_SECONDS = 0.1


class ReplayShard:
    """
    Bounded ring of transitions; once full, each insert evicts the oldest.
    inserted == len(shard) + evicted at all times.
    """

    def __init__(self, capacity: int, shard_id: int = 0):
        if capacity < 1:
            raise ConfigurationError("shard capacity must be >= 1")
        self.capacity = capacity
        self.shard_id = shard_id
        self.inserted = 0
        self.evicted = 0
        self.sampled = 0
        self._items: List[Transition] = []
        self._head = 0  # slot of the oldest item once full
        self._cond = threading.Condition()

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)

    def insert(self, transition: Transition) -> None:
        with self._cond:
            if len(self._items) < self.capacity:
                self._items.append(transition)
            else:
                self._items[self._head] = transition
                self._head = (self._head + 1) % self.capacity
                self.evicted += 1
            self.inserted += 1
            self._cond.notify_all()

    def get(self, index: int) -> Transition:
        with self._cond:
            return self._items[index]

    def sample(
        self,
        n: int,
        rng: np.random.Generator,
        stop_event: Optional[threading.Event] = None,
    ) -> List[Transition]:
        """Uniform draws with replacement; blocks while the shard is empty"""
        with self._cond:
            while not self._items:
                if stop_event is not None and stop_event.is_set():
                    return []
                self._cond.wait(WAIT_SECONDS)
            idx = rng.integers(0, len(self._items), size=n)
            self.sampled += n
            return [self._items[i] for i in idx]

    def snapshot(self) -> List[Transition]:
        """Contents oldest first"""
        with self._cond:
            return self._items[self._head:] + self._items[:self._head]

    def slots(self) -> Tuple[List[Transition], int]:
        """Raw slot order and the head position, for exact restoration"""
        with self._cond:
            return list(self._items), self._head

    def mark_sampled(self, n: int) -> None:
        with self._cond:
            self.sampled += n

    def restore(self, items: Sequence[Transition], head: int, inserted: int, evicted: int) -> None:
        if len(items) > self.capacity or inserted != len(items) + evicted:
            raise UsageError(f"shard {self.shard_id}: inconsistent replay state")
        if not 0 <= head < max(1, len(items)):
            raise UsageError(f"shard {self.shard_id}: head {head} outside the ring")
        with self._cond:
            self._items = list(items)
            self._head = head
            self.inserted = inserted
            self.evicted = evicted
            self._cond.notify_all()

    def stats(self) -> Dict[str, int]:
        with self._cond:
            return {
                "shard": self.shard_id,
                "resident": len(self._items),
                "inserted": self.inserted,
                "evicted": self.evicted,
                "sampled": self.sampled,
            }


class ShardRouter:
    """Round-robin writes, uniform reads over the union of all shards"""

    def __init__(self, shards: Sequence[ReplayShard]):
        if not shards:
            raise ConfigurationError("at least one replay shard is required")
        self.shards = list(shards)
        self._cursor = 0
        self._lock = threading.Lock()
        self._arrival = threading.Condition()

    @classmethod
    def build(cls, n_shards: int, capacity: int) -> "ShardRouter":
        return cls([ReplayShard(capacity, shard_id=i) for i in range(n_shards)])

    def insert(self, transition: Transition) -> int:
        with self._lock:
            shard_id = self._cursor
            self._cursor = (self._cursor + 1) % len(self.shards)
        self.shards[shard_id].insert(transition)
        with self._arrival:
            self._arrival.notify_all()
        return shard_id

    def __len__(self) -> int:
        return sum(len(s) for s in self.shards)

    def wait_for(self, n: int, stop_event: Optional[threading.Event] = None) -> bool:
        """Block until at least n transitions are resident; False if stopped first"""
        with self._arrival:
            while len(self) < n:
                if stop_event is not None and stop_event.is_set():
                    return False
                self._arrival.wait(WAIT_SECONDS)
        return True

    def sample(
        self,
        n: int,
        rng: np.random.Generator,
        stop_event: Optional[threading.Event] = None,
    ) -> List[Transition]:
        """
        n uniform draws over every resident transition; blocks while replay is empty

        Returns:
            Transitions, or [] when stopped while waiting
        """
        if not self.wait_for(1, stop_event):
            return []
        sizes = np.array([len(s) for s in self.shards])
        bounds = np.cumsum(sizes)
        idx = rng.integers(0, int(bounds[-1]), size=n)
        owners = np.searchsorted(bounds, idx, side="right")
        starts = bounds - sizes
        out = []
        for i, owner in zip(idx, owners):
            shard = self.shards[owner]
            out.append(shard.get(int(i - starts[owner])))
        for owner, count in zip(*np.unique(owners, return_counts=True)):
            self.shards[owner].mark_sampled(int(count))
        return out

    @property
    def cursor(self) -> int:
        return self._cursor

    @cursor.setter
    def cursor(self, value: int) -> None:
        with self._lock:
            self._cursor = value % len(self.shards)

    def stats(self) -> List[Dict[str, int]]:
        return [s.stats() for s in self.shards]

    def conserved(self) -> bool:
        return all(s.inserted == len(s) + s.evicted for s in self.shards)
