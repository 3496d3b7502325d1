"""Rebuild the registry, network and parameters a checkpoint was trained with"""

from dataclasses import dataclass
from pathlib import Path

from src.config.run_config import RunConfig
from src.core.exceptions import RestoreError
from src.env.tasks import TaskRegistry, task_registry
from src.netcore.network import PIQTNetwork
from src.pipeline.persistence import TrainingState, load_training_checkpoint
from src.pipeline.runner import build_network


@dataclass
class Session:
    config: RunConfig
    registry: TaskRegistry
    network: PIQTNetwork
    state: TrainingState
    checkpoint: Path


def open_checkpoint(path: str | Path) -> Session:
    """
    Raises:
        RestoreError on unreadable or inconsistent checkpoints
    """
    path = Path(path)
    loaded = load_training_checkpoint(path)
    registry = task_registry(loaded.config.env)
    network = build_network(loaded.config, registry)
    if network.layout != loaded.state.theta.layout:
        raise RestoreError(f"{path}: stored layout does not match the network its config describes")
    return Session(loaded.config, registry, network, loaded.state, path)
