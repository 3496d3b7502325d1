"""Versioned, immutable parameter publication"""

import threading
from dataclasses import dataclass
from typing import List, Optional

from src.core.exceptions import UsageError
from src.netcore.params import LaggedParams, ParameterSet


@dataclass(frozen=True)
class PublishedParams:
    version: int
    theta: ParameterSet
    lagged: LaggedParams


class ParameterStore:
    """The learner publishes; every other worker reads the latest version"""

    def __init__(self):
        self._latest: Optional[PublishedParams] = None
        self._cond = threading.Condition()
        self.versions: List[int] = []

    def publish(self, theta: ParameterSet, lagged: LaggedParams) -> PublishedParams:
        with self._cond:
            if self._latest is not None and theta.version <= self._latest.version:
                raise UsageError(
                    f"published version must increase: {theta.version} after {self._latest.version}"
                )
            self._latest = PublishedParams(theta.version, theta.frozen(), lagged.frozen())
            self.versions.append(theta.version)
            self._cond.notify_all()
            return self._latest

    def latest(self) -> PublishedParams:
        with self._cond:
            if self._latest is None:
                raise UsageError("no parameters have been published yet")
            return self._latest

    def wait_for_first(self, stop_event: Optional[threading.Event] = None) -> bool:
        with self._cond:
            while self._latest is None:
                if stop_event is not None and stop_event.is_set():
                    return False
                self._cond.wait(0.1)
        return True
