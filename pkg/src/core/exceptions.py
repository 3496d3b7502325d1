"""Custom exceptions for the PI-QT-Opt engine"""


class PIQTException(Exception):
    """Base exception for engine operations"""
    pass


class RegistryError(PIQTException):
    """Unknown task or invalid task registry lookup"""
    pass


class UsageError(PIQTException):
    """API used outside of its contract (finished episode, empty batch, version mismatch)"""
    pass


class ConfigurationError(PIQTException):
    """Invalid run configuration or shape mismatch"""
    pass


class NumericError(PIQTException):
    """Numerical procedure failed to converge"""
    pass


class TrainingError(PIQTException):
    """Non-finite loss or gradient during learning"""
    pass


class RestoreError(PIQTException):
    """Checkpoint file is corrupt or incompatible"""
    pass
