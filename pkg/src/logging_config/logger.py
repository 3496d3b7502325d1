import logging
import logging.handlers
from pathlib import Path
from typing import Optional

# Process-wide logging parameters, overridden once by the CLI from Settings
_log_config = {
    "level": "INFO",
    "log_dir": "logs",
    "log_to_file": False,
}

_FORMAT = "%(asctime)s [%(levelname)-8s] %(name)s: %(message)s"
_DATEFMT = "%Y-%m-%d %H:%M:%S"
LOG_FILE = "piqt.log"


def _level(name: Optional[str] = None) -> int:
    return getattr(logging, (name or _log_config["level"]).upper(), logging.INFO)


def _attach_file_handler(logger: logging.Logger, level: int) -> None:
    if any(isinstance(h, logging.handlers.RotatingFileHandler) for h in logger.handlers):
        return
    log_dir = Path(_log_config["log_dir"])
    try:
        log_dir.mkdir(exist_ok=True, parents=True)
        handler = logging.handlers.RotatingFileHandler(
            str(log_dir / LOG_FILE),
            maxBytes=10_000_000,  # 10 MB
            backupCount=5,
            encoding="utf-8",
        )
    except OSError as e:
        logger.warning(f"File logging disabled, cannot open {log_dir / LOG_FILE}: {e}")
        return
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(fmt=_FORMAT, datefmt=_DATEFMT))
    logger.addHandler(handler)


def configure_logging(log_level: str = "INFO", log_dir: str = "logs", log_to_file: bool = False):
    """
    Set global logging parameters.

    Module loggers are created at import time, before the CLI reads Settings,
    so loggers that already exist are re-levelled and get the file handler here.
    """
    _log_config.update({
        "level": log_level,
        "log_dir": log_dir,
        "log_to_file": log_to_file,
    })
    level = _level()
    for name in list(logging.root.manager.loggerDict):
        if not name.startswith("src."):
            continue
        existing = logging.getLogger(name)
        existing.setLevel(level)
        for handler in existing.handlers:
            handler.setLevel(level)
        if log_to_file:
            _attach_file_handler(existing, level)


def setup_logger(name: str, log_level: Optional[str] = None) -> logging.Logger:
    """
    Create and configure a module logger

    Args:
        name: Logger name (usually __name__)
        log_level: Level override (DEBUG, INFO, WARNING, ERROR, CRITICAL)

    Returns:
        Configured logger
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    level = _level(log_level)
    logger.setLevel(level)

    console = logging.StreamHandler()
    console.setLevel(level)
    console.setFormatter(logging.Formatter(fmt=_FORMAT, datefmt=_DATEFMT))
    logger.addHandler(console)

    if _log_config["log_to_file"]:
        _attach_file_handler(logger, level)

    # Keep records out of the root logger so nothing prints twice
    logger.propagate = False
    return logger
