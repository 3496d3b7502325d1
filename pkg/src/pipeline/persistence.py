"""Training checkpoints: parameters + optimizer block, with a replay sidecar for resuming"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from src.config.run_config import RunConfig, parse_run_config
from src.core.exceptions import ConfigurationError, RestoreError, UsageError
from src.env.types import ContextKind, Observation, TaskContext, Transition
from src.logging_config.logger import setup_logger
from src.netcore.checkpoint import CheckpointData, read_checkpoint, write_checkpoint
from src.netcore.network import PIQTNetwork
from src.netcore.params import LaggedParams, ParameterSet
from src.pipeline.replay import ShardRouter

logger = setup_logger(__name__)

REPLAY_SUFFIX = ".replay.npz"


@dataclass
class TrainingState:
    """Everything the learner owns"""

    theta: ParameterSet
    lagged: LaggedParams
    velocity: np.ndarray
    step: int = 0
    counters: Dict[str, Any] = field(default_factory=dict)


@dataclass
class LoadedCheckpoint:
    state: TrainingState
    config: RunConfig
    metadata: Dict[str, Any]


def replay_path(checkpoint: str | Path) -> Path:
    checkpoint = Path(checkpoint)
    return checkpoint.with_name(checkpoint.name + REPLAY_SUFFIX)


def save_training_checkpoint(
    path: str | Path,
    state: TrainingState,
    config: RunConfig,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    metadata = {
        "step": state.step,
        "versions": {
            "theta": state.theta.version,
            "theta1": state.lagged.theta1.version,
            "theta2": state.lagged.theta2.version,
        },
        "optimizer": {
            "kind": "sgd_momentum",
            "learning_rate": config.training.learning_rate,
            "momentum": config.training.momentum,
        },
        "lag": {"tau": state.lagged.tau, "period": state.lagged.period},
        "aux_enabled": config.aux.enabled,
        "counters": state.counters,
        "run_config": config.model_dump(mode="json"),
    }
    if extra:
        metadata.update(extra)
    data = CheckpointData(
        layout=state.theta.layout,
        vectors={
            "theta": state.theta.vector,
            "theta1": state.lagged.theta1.vector,
            "theta2": state.lagged.theta2.vector,
            "velocity": state.velocity,
        },
        metadata=metadata,
    )
    return write_checkpoint(path, data)


def load_training_checkpoint(path: str | Path, network: Optional[PIQTNetwork] = None) -> LoadedCheckpoint:
    """
    Raises:
        RestoreError on a corrupt file, missing vectors or a layout that differs from `network`
    """
    data = read_checkpoint(path)
    missing = {"theta", "theta1", "theta2", "velocity"} - set(data.vectors)
    if missing:
        raise RestoreError(f"{path}: missing vectors {sorted(missing)}")
    meta = data.metadata
    try:
        config = parse_run_config(meta["run_config"])
        versions = meta["versions"]
        lag = meta["lag"]
        step = int(meta["step"])
    except (KeyError, TypeError, ValueError, ConfigurationError) as e:
        raise RestoreError(f"{path}: corrupt metadata: {e}") from e
    if network is not None and network.layout != data.layout:
        raise RestoreError(f"{path}: parameter layout does not match the configured network")

    theta = ParameterSet(data.vectors["theta"], data.layout, int(versions["theta"]))
    lagged = LaggedParams(
        theta1=ParameterSet(data.vectors["theta1"], data.layout, int(versions["theta1"])),
        theta2=ParameterSet(data.vectors["theta2"], data.layout, int(versions["theta2"])),
        tau=float(lag["tau"]),
        period=int(lag["period"]),
    )
    state = TrainingState(theta, lagged, data.vectors["velocity"], step, dict(meta.get("counters", {})))
    return LoadedCheckpoint(state=state, config=config, metadata=meta)


# ---------------------------------------------------------------------- replay sidecar

def _pack(transitions: List[Transition], prefix: str, arrays: Dict[str, np.ndarray]) -> None:
    if not transitions:
        arrays[f"{prefix}count"] = np.array(0)
        return
    arrays[f"{prefix}count"] = np.array(len(transitions))
    arrays[f"{prefix}visual"] = np.stack([t.obs.visual for t in transitions])
    arrays[f"{prefix}proprio"] = np.stack([t.obs.proprio for t in transitions])
    arrays[f"{prefix}next_visual"] = np.stack([t.next_obs.visual for t in transitions])
    arrays[f"{prefix}next_proprio"] = np.stack([t.next_obs.proprio for t in transitions])
    arrays[f"{prefix}action"] = np.stack([t.action for t in transitions])
    arrays[f"{prefix}reward"] = np.array([t.reward for t in transitions])
    arrays[f"{prefix}done"] = np.array([t.done for t in transitions])
    arrays[f"{prefix}task_id"] = np.array([t.task_id for t in transitions])
    arrays[f"{prefix}task_index"] = np.array([t.context.task_index for t in transitions])
    if transitions[0].context.kind == ContextKind.IMAGE_MASK:
        arrays[f"{prefix}first_frame"] = np.stack([t.context.first_frame for t in transitions])
        arrays[f"{prefix}overlay"] = np.stack([t.context.overlay for t in transitions])


def _unpack(archive, prefix: str, kind: ContextKind) -> List[Transition]:
    # NpzFile decompresses on every key access
    npz = {key: archive[key] for key in archive.files if key.startswith(prefix)}
    count = int(npz[f"{prefix}count"])
    out = []
    for i in range(count):
        if kind == ContextKind.IMAGE_MASK:
            context = TaskContext(
                kind=kind,
                task_index=int(npz[f"{prefix}task_index"][i]),
                first_frame=npz[f"{prefix}first_frame"][i],
                overlay=npz[f"{prefix}overlay"][i],
            )
        else:
            context = TaskContext(kind=kind, task_index=int(npz[f"{prefix}task_index"][i]))
        out.append(Transition(
            obs=Observation(npz[f"{prefix}visual"][i], npz[f"{prefix}proprio"][i]),
            action=npz[f"{prefix}action"][i],
            reward=float(npz[f"{prefix}reward"][i]),
            next_obs=Observation(npz[f"{prefix}next_visual"][i], npz[f"{prefix}next_proprio"][i]),
            done=bool(npz[f"{prefix}done"][i]),
            context=context,
            task_id=str(npz[f"{prefix}task_id"][i]),
        ))
    return out


def save_replay(path: str | Path, router: ShardRouter, kind: ContextKind) -> Path:
    path = Path(path)
    arrays: Dict[str, np.ndarray] = {
        "n_shards": np.array(len(router.shards)),
        "cursor": np.array(router.cursor),
        "context_kind": np.array(kind.value),
    }
    for shard in router.shards:
        items, head = shard.slots()
        prefix = f"s{shard.shard_id}_"
        _pack(items, prefix, arrays)
        arrays[f"{prefix}head"] = np.array(head)
        arrays[f"{prefix}inserted"] = np.array(shard.inserted)
        arrays[f"{prefix}evicted"] = np.array(shard.evicted)
    # savez appends .npz to names that lack it
    np.savez_compressed(path, **arrays)
    return path


def load_replay(path: str | Path, router: ShardRouter) -> None:
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as npz:
            if int(npz["n_shards"]) != len(router.shards):
                raise RestoreError(f"{path}: shard count differs from the configured replay")
            kind = ContextKind(str(npz["context_kind"]))
            for shard in router.shards:
                prefix = f"s{shard.shard_id}_"
                shard.restore(
                    _unpack(npz, prefix, kind),
                    head=int(npz[f"{prefix}head"]),
                    inserted=int(npz[f"{prefix}inserted"]),
                    evicted=int(npz[f"{prefix}evicted"]),
                )
            router.cursor = int(npz["cursor"])
    except (OSError, KeyError, ValueError, UsageError) as e:
        raise RestoreError(f"cannot restore replay from {path}: {e}") from e
    logger.info(f"Replay restored from {path}: {len(router)} transitions")
