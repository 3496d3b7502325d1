"""Bounded FIFO between Bellman updaters and the learner"""

import queue
import threading
from typing import List, Optional

from src.core.exceptions import ConfigurationError
from src.qtopt.bellman import LabeledSample

WAIT_SECONDS = 0.1


class TrainBuffer:
    """Producers block when full; nothing is ever dropped"""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigurationError("train buffer capacity must be >= 1")
        self.capacity = capacity
        self._queue: "queue.Queue[LabeledSample]" = queue.Queue(maxsize=capacity)
        self.put_count = 0
        self.get_count = 0
        self._count_lock = threading.Lock()

    def __len__(self) -> int:
        return self._queue.qsize()

    def put(self, sample: LabeledSample, stop_event: Optional[threading.Event] = None) -> bool:
        """Block until there is room; False when stopped first"""
        while True:
            try:
                self._queue.put(sample, timeout=WAIT_SECONDS)
                break
            except queue.Full:
                if stop_event is not None and stop_event.is_set():
                    return False
        with self._count_lock:
            self.put_count += 1
        return True

    def get_batch(self, k: int, stop_event: Optional[threading.Event] = None) -> Optional[List[LabeledSample]]:
        """
        Next k samples in arrival order

        Returns:
            The batch, or None when stopped before k samples arrived
            (already taken samples are then lost with the shutdown)
        """
        batch: List[LabeledSample] = []
        while len(batch) < k:
            try:
                batch.append(self._queue.get(timeout=WAIT_SECONDS))
            except queue.Empty:
                if stop_event is not None and stop_event.is_set():
                    return None
        with self._count_lock:
            self.get_count += k
        return batch
