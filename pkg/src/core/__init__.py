from .base_worker import BaseWorker
from .exceptions import (
    PIQTException,
    RegistryError,
    UsageError,
    ConfigurationError,
    NumericError,
    TrainingError,
    RestoreError,
)

__all__ = [
    "BaseWorker",
    "PIQTException",
    "RegistryError",
    "UsageError",
    "ConfigurationError",
    "NumericError",
    "TrainingError",
    "RestoreError",
]
