"""Base worker class for all pipeline stages"""

import threading
from abc import ABC, abstractmethod
from typing import Optional

from src.logging_config.logger import setup_logger


class BaseWorker(ABC):
    """
    Abstract base class for pipeline workers (collectors, Bellman updaters, learner).
    Subclasses implement run_once; run_forever drives it from a thread until stopped.
    """

    def __init__(self, worker_name: str, stop_event: Optional[threading.Event] = None):
        """
        Initialize worker

        Args:
            worker_name: Name used as log prefix (e.g., 'collector-0', 'learner')
            stop_event: Shared event that ends run_forever loops
        """
        self.worker_name = worker_name
        self.stop_event = stop_event or threading.Event()
        self.iterations = 0
        self.logger = setup_logger(f"{self.__class__.__module__}.{self.__class__.__name__}")

    @abstractmethod
    def run_once(self) -> None:
        """
        Perform one unit of work (one episode, one labeled batch, one learner step)

        Raises:
            PIQTException subclasses on contract violations
        """
        pass

    def run_forever(self) -> None:
        """Loop run_once until the stop event is set"""
        self.log_info("started")
        try:
            while not self.stop_event.is_set():
                self.run_once()
                self.iterations += 1
        except Exception as e:
            self.log_error(f"stopped on error: {e}", exc_info=True)
            self.stop_event.set()
            raise
        self.log_info(f"stopped after {self.iterations} iterations")

    def log_info(self, message: str):
        """Log info message"""
        self.logger.info(f"[{self.worker_name}] {message}")

    def log_warning(self, message: str):
        """Log warning message"""
        self.logger.warning(f"[{self.worker_name}] {message}")

    def log_error(self, message: str, exc_info: bool = False):
        """Log error message"""
        self.logger.error(f"[{self.worker_name}] {message}", exc_info=exc_info)
