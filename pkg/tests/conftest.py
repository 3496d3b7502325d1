"""Shared fixtures: tiny configurations that train in seconds"""

from typing import List

import numpy as np
import pytest

from src.config.run_config import (
    AuxConfig,
    CemConfig,
    EnvConfig,
    EvalConfig,
    NetworkConfig,
    RunConfig,
    TaskFamilyConfig,
    TrainingConfig,
)
from src.env.policies import RandomPolicy
from src.env.tabletop import TabletopEnv
from src.env.tasks import task_registry
from src.env.types import Transition
from src.evalcli.evaluation import run_episode
from src.netcore.params import LaggedParams
from src.pipeline.runner import build_network

PICK_OBJECTS = ["coke_can", "apple", "sponge"]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-count statistical checks (deselect with -m 'not slow')")


def make_config(**overrides) -> RunConfig:
    """Small run: 6x6 grid, flat encoder, tanh, a handful of learner steps"""
    sections = {
        "env": EnvConfig(
            grid_size=6,
            step_limit=6,
            n_distractors=0,
            families=[TaskFamilyConfig(skill="pick", objects=PICK_OBJECTS)],
            holdout_fraction=0.0,
        ),
        "network": NetworkConfig(
            encoder_mode="flat",
            embedding_dim=8,
            q_hidden=(8,),
            pi_hidden_base=8,
            pi_width_factor=1.0,
            pi_layers=1,
            z_dim=4,
            task_embedding_dim=3,
            activation="tanh",
        ),
        "cem": CemConfig(n_samples=8, n_elites=2, iterations=2),
        "aux": AuxConfig(),
        "training": TrainingConfig(
            n_collectors=1,
            n_replay_shards=2,
            n_bellman_updaters=1,
            batch_size=4,
            total_steps=6,
            publish_interval=2,
            checkpoint_interval=2,
            snapshot_period=3,
            shard_capacity=50,
            train_buffer_capacity=8,
            min_replay_size=8,
            label_chunk=2,
            metrics_flush_every=1,
        ),
        "eval": EvalConfig(episodes=3, seeds=[0, 1], mi_td_episodes_per_task=1, mi_td_batch=4, curve_episodes=2),
    }
    sections.update(overrides)
    return RunConfig(name="tiny", **sections)


def with_section(config: RunConfig, section: str, **fields) -> RunConfig:
    """Copy of config with fields of one section replaced (validated again)"""
    payload = config.model_dump()
    payload[section].update(fields)
    return RunConfig.model_validate(payload)


def random_transitions(config: RunConfig, n_episodes: int = 2, seed: int = 0) -> List[Transition]:
    registry = task_registry(config.env)
    env = TabletopEnv(config.env, registry)
    policy = RandomPolicy(np.random.default_rng(seed))
    out: List[Transition] = []
    for i in range(n_episodes):
        task = registry.train[i % len(registry.train)]
        out.extend(run_episode(env, policy, task, seed=seed + i))
    return out


@pytest.fixture
def tiny_config() -> RunConfig:
    return make_config()


@pytest.fixture
def embedding_config() -> RunConfig:
    return with_section(make_config(), "env", context_kind="embedding")


@pytest.fixture
def registry(tiny_config):
    return task_registry(tiny_config.env)


@pytest.fixture
def network(tiny_config, registry):
    return build_network(tiny_config, registry)


@pytest.fixture
def theta(network):
    return network.init_params(seed=0)


@pytest.fixture
def lagged(theta, tiny_config):
    return LaggedParams.from_params(theta, tiny_config.training.tau, tiny_config.training.snapshot_period)


@pytest.fixture
def transitions(tiny_config) -> List[Transition]:
    return random_transitions(tiny_config, n_episodes=3)
