from .replay import ReplayShard, ShardRouter
from .train_buffer import TrainBuffer
from .param_store import ParameterStore, PublishedParams
from .metrics import EPISODE_COLUMNS, METRIC_COLUMNS, CsvStream, EpisodeRecord, epsilon
from .persistence import (
    LoadedCheckpoint,
    TrainingState,
    load_replay,
    load_training_checkpoint,
    replay_path,
    save_replay,
    save_training_checkpoint,
)
from .workers import BellmanUpdater, Collector, Learner
from .runner import RunSummary, TrainingPipeline, build_network, initial_state

__all__ = [
    "ReplayShard",
    "ShardRouter",
    "TrainBuffer",
    "ParameterStore",
    "PublishedParams",
    "EPISODE_COLUMNS",
    "METRIC_COLUMNS",
    "CsvStream",
    "EpisodeRecord",
    "epsilon",
    "LoadedCheckpoint",
    "TrainingState",
    "load_replay",
    "load_training_checkpoint",
    "replay_path",
    "save_replay",
    "save_training_checkpoint",
    "BellmanUpdater",
    "Collector",
    "Learner",
    "RunSummary",
    "TrainingPipeline",
    "build_network",
    "initial_state",
]
