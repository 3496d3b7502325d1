"""Run configuration tree: JSON file -> validated pydantic models"""

import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.core.exceptions import ConfigurationError
from src.logging_config.logger import setup_logger

logger = setup_logger(__name__)


class TaskFamilyConfig(BaseModel):
    """One skill family; objects=None means every catalog object eligible for the skill"""

    skill: Literal["pick", "move_near", "knock"]
    objects: Optional[List[str]] = None
    holdout_objects: bool = False


class EnvConfig(BaseModel):
    grid_size: int = Field(16, ge=4)
    height_levels: int = Field(3, ge=2)
    mask_size: int = Field(3, ge=1)
    step_limit: int = Field(40, ge=1)
    max_step_cells: int = Field(2, ge=1)
    lift_threshold: int = Field(2, ge=1)
    near_radius: float = Field(2.0, gt=0)
    n_distractors: int = Field(2, ge=0)
    control_mode: Literal["blocking", "concurrent"] = "blocking"
    context_kind: Literal["image_mask", "embedding"] = "image_mask"
    families: List[TaskFamilyConfig] = Field(
        default_factory=lambda: [
            TaskFamilyConfig(skill="pick"),
            TaskFamilyConfig(skill="move_near"),
            TaskFamilyConfig(skill="knock"),
        ]
    )
    holdout_fraction: float = Field(0.1, ge=0.0, lt=1.0)
    split_seed: int = 0

    @field_validator("mask_size")
    @classmethod
    def validate_mask_size(cls, v):
        if v % 2 == 0:
            raise ValueError("mask_size must be odd so squares center on a cell")
        return v

    @model_validator(mode="after")
    def validate_heights(self):
        if self.lift_threshold > self.height_levels:
            raise ValueError("lift_threshold must not exceed height_levels")
        if not self.families:
            raise ValueError("at least one task family is required")
        return self


class NetworkConfig(BaseModel):
    encoder_mode: Literal["conv-tiny", "flat"] = "conv-tiny"
    embedding_dim: int = Field(128, ge=1)
    q_hidden: Tuple[int, ...] = (64, 64)
    pi_hidden_base: int = Field(512, ge=1)
    pi_width_factor: float = Field(0.25, gt=0)
    pi_layers: int = Field(2, ge=1)
    z_dim: int = Field(64, ge=1)
    task_embedding_dim: int = Field(16, ge=1)
    conv_channels: Tuple[int, int] = (8, 16)
    activation: Literal["relu", "tanh"] = "relu"

    @field_validator("q_hidden", "conv_channels")
    @classmethod
    def validate_widths(cls, v):
        if any(w < 1 for w in v):
            raise ValueError("all widths must be >= 1")
        return v

    @property
    def pi_hidden(self) -> Tuple[int, ...]:
        width = max(1, int(round(self.pi_hidden_base * self.pi_width_factor)))
        return (width,) * self.pi_layers


class CemConfig(BaseModel):
    n_samples: int = Field(64, ge=2)
    n_elites: int = Field(6, ge=1)
    iterations: int = Field(3, ge=1)
    init_sigma: float = Field(0.5, gt=0)
    sigma_floor: float = Field(0.01, gt=0)
    action_low: Tuple[float, ...] = (-1.0, -1.0, -1.0, -1.0)
    action_high: Tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)

    @model_validator(mode="after")
    def validate_elites_and_bounds(self):
        if not self.n_elites < self.n_samples:
            raise ValueError("n_elites must be smaller than n_samples")
        if len(self.action_low) != len(self.action_high):
            raise ValueError("action bounds must have equal length")
        for lo, hi in zip(self.action_low, self.action_high):
            if not (abs(lo) < float("inf") and abs(hi) < float("inf")) or lo >= hi:
                raise ValueError("action bounds must be finite with low < high")
        return self

    @property
    def action_dim(self) -> int:
        return len(self.action_low)


class AuxConfig(BaseModel):
    enabled: bool = True
    beta: float = Field(0.01, ge=0.0)
    kappa_e: float = Field(8192.0, gt=0)
    kappa_b: float = Field(7.0, gt=0)
    bellman_weight: float = Field(1.0, ge=0.0)
    ceb_weight: float = Field(0.01, ge=0.0)
    deterministic_forward: bool = True


class TrainingConfig(BaseModel):
    mode: Literal["sync", "threaded"] = "sync"
    n_collectors: int = Field(4, ge=1)
    n_replay_shards: int = Field(2, ge=1)
    n_bellman_updaters: int = Field(2, ge=1)
    batch_size: int = Field(256, ge=1)
    learning_rate: float = Field(9.56e-3, gt=0)
    momentum: float = Field(0.984, ge=0.0, lt=1.0)
    gamma: float = Field(0.9, ge=0.0, le=1.0)
    tau: float = Field(0.005, ge=0.0, le=1.0)
    snapshot_period: int = Field(500, ge=1)
    eps_start: float = Field(1.0, ge=0.0, le=1.0)
    eps_end: float = Field(0.1, ge=0.0, le=1.0)
    eps_decay_fraction: float = Field(0.2, ge=0.0, le=1.0)
    total_steps: int = Field(50_000, ge=1)
    publish_interval: int = Field(50, ge=1)
    checkpoint_interval: int = Field(1000, ge=1)
    shard_capacity: int = Field(50_000, ge=1)
    train_buffer_capacity: int = Field(1024, ge=1)
    min_replay_size: int = Field(512, ge=1)
    collect_every: int = Field(1, ge=1)
    label_chunk: int = Field(32, ge=1)
    metrics_flush_every: int = Field(100, ge=1)
    seed: int = 0


class EvalConfig(BaseModel):
    episodes: int = Field(200, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2])
    mi_td_episodes_per_task: int = Field(20, ge=1)
    mi_td_batch: int = Field(128, ge=1)
    curve_episodes: int = Field(50, ge=1)


class RunConfig(BaseModel):
    """Complete configuration of one training / evaluation run"""

    name: str = "piqt"
    env: EnvConfig = Field(default_factory=EnvConfig)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    cem: CemConfig = Field(default_factory=CemConfig)
    aux: AuxConfig = Field(default_factory=AuxConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @model_validator(mode="after")
    def validate_cross_fields(self):
        if self.training.checkpoint_interval % self.training.publish_interval != 0:
            raise ValueError("training.checkpoint_interval must be a multiple of training.publish_interval")
        if self.training.train_buffer_capacity < self.training.batch_size:
            raise ValueError("training.train_buffer_capacity must hold at least one batch")
        if self.cem.action_dim != 4:
            raise ValueError("cem action bounds must cover 4 action components (dx, dy, dz, gripper)")
        return self


def format_validation_error(error: ValidationError) -> str:
    """Flatten pydantic errors into 'field.path: message' lines"""
    lines = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item.get("loc", ())) or "<root>"
        lines.append(f"{loc}: {item.get('msg')}")
    return "; ".join(lines)


def parse_run_config(payload: dict) -> RunConfig:
    """Validate a config dict, mapping validation failures to ConfigurationError"""
    try:
        return RunConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigurationError(format_validation_error(e)) from e


def load_run_config(path: str | Path) -> RunConfig:
    """
    Load RunConfig from a JSON file

    Args:
        path: JSON file path

    Returns:
        Validated RunConfig

    Raises:
        ConfigurationError on unreadable file, bad JSON or invalid fields
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise ConfigurationError("config root must be a JSON object")
    config = parse_run_config(payload)
    logger.info(f"Loaded run config '{config.name}' from {path}")
    return config


def save_run_config(config: RunConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config.model_dump_json(indent=2), encoding="utf-8")
    return path


def preset_config(preset: str) -> RunConfig:
    """
    Build a named preset

    Args:
        preset: 'smoke' (flat encoder, 2k steps, Pick only, 1/1/1 workers),
                'pick' (Pick family learning run), 'suite' (Pick + MoveNear + Knock)

    Returns:
        RunConfig
    """
    if preset == "smoke":
        return RunConfig(
            name="smoke",
            env=EnvConfig(families=[TaskFamilyConfig(skill="pick")]),
            network=NetworkConfig(
                encoder_mode="flat",
                embedding_dim=32,
                q_hidden=(32, 32),
                pi_width_factor=0.0625,
                z_dim=16,
            ),
            training=TrainingConfig(
                n_collectors=1,
                n_replay_shards=1,
                n_bellman_updaters=1,
                batch_size=32,
                total_steps=2000,
                shard_capacity=5000,
                min_replay_size=64,
                checkpoint_interval=500,
            ),
            eval=EvalConfig(episodes=20, seeds=[0, 1], curve_episodes=10),
        )
    if preset == "pick":
        return RunConfig(
            name="pick",
            env=EnvConfig(families=[TaskFamilyConfig(skill="pick")]),
            network=NetworkConfig(encoder_mode="flat"),
            training=TrainingConfig(
                n_collectors=1,
                n_replay_shards=1,
                n_bellman_updaters=1,
                batch_size=128,
                total_steps=50_000,
                shard_capacity=20_000,
            ),
        )
    if preset == "suite":
        return RunConfig(name="suite")
    raise ConfigurationError(f"unknown preset: {preset} (expected smoke, pick or suite)")
