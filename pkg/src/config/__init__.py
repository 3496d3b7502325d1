from .settings import Settings, get_settings
from .run_config import (
    RunConfig,
    EnvConfig,
    TaskFamilyConfig,
    NetworkConfig,
    CemConfig,
    AuxConfig,
    TrainingConfig,
    EvalConfig,
    load_run_config,
    parse_run_config,
    save_run_config,
    preset_config,
)

__all__ = [
    "Settings",
    "get_settings",
    "RunConfig",
    "EnvConfig",
    "TaskFamilyConfig",
    "NetworkConfig",
    "CemConfig",
    "AuxConfig",
    "TrainingConfig",
    "EvalConfig",
    "load_run_config",
    "parse_run_config",
    "save_run_config",
    "preset_config",
]
