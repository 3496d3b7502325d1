"""Double-DQN targets under the lagged critics"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from src.config.run_config import CemConfig
from src.core.exceptions import UsageError
from src.env.types import Transition
from src.netcore.batch import StateBatch
from src.netcore.network import PIQTNetwork
from src.netcore.params import LaggedParams
from src.qtopt.cem import cem_optimize


@dataclass(frozen=True)
class LabeledSample:
    transition: Transition
    target: float
    next_action: np.ndarray
    target_version: int

    def __post_init__(self):
        if not 0.0 <= self.target <= 1.0:
            raise UsageError(f"Bellman target {self.target} outside [0, 1]")
        if self.transition.done and self.target != self.transition.reward:
            raise UsageError("terminal transitions must carry their reward as target")


def targets_from_values(
    rewards: np.ndarray,
    dones: np.ndarray,
    q1: np.ndarray,
    q2: np.ndarray,
    gamma: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Q_T = clip(r + γ min(q1, q2), 0, 1), or r on terminal steps

    Returns:
        (Q_T, V)
    """
    value = np.minimum(q1, q2)
    target = np.clip(rewards + gamma * value, 0.0, 1.0)
    return np.where(dones, rewards, target), value


def bellman_targets(
    transitions: Sequence[Transition],
    network: PIQTNetwork,
    lagged: LaggedParams,
    gamma: float,
    cfg: CemConfig,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Batched targets

    a' = CEM argmax of Q_θ̄1 at s'; V = min(Q_θ̄1(s', a'), Q_θ̄2(s', a')).
    a' is computed for terminal transitions too.

    Returns:
        (Q_T (B,), a' (B, A), V (B,))
    """
    if not transitions:
        raise UsageError("no transitions to label")
    next_states = StateBatch.from_items([t.next_obs for t in transitions], [t.context for t in transitions])
    q1 = network.q_function(lagged.theta1, next_states)
    q2 = network.q_function(lagged.theta2, next_states)

    next_actions = cem_optimize(q1, next_states.size, cfg, rng)
    candidates = next_actions[:, None, :]
    rewards = np.array([t.reward for t in transitions], dtype=np.float64)
    dones = np.array([t.done for t in transitions], dtype=bool)
    targets, value = targets_from_values(rewards, dones, q1(candidates)[:, 0], q2(candidates)[:, 0], gamma)
    return targets, next_actions, value


def bellman_target(
    transition: Transition,
    lagged: LaggedParams,
    gamma: float,
    cfg: CemConfig,
    network: PIQTNetwork,
    seed: int | np.random.Generator,
) -> Tuple[float, np.ndarray]:
    """(Q_T, a') for one transition"""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    targets, next_actions, _ = bellman_targets([transition], network, lagged, gamma, cfg, rng)
    return float(targets[0]), next_actions[0]


def label_transitions(
    transitions: Sequence[Transition],
    network: PIQTNetwork,
    lagged: LaggedParams,
    gamma: float,
    cfg: CemConfig,
    rng: np.random.Generator,
) -> List[LabeledSample]:
    """Attach targets and next actions, stamped with θ̄1's version"""
    targets, next_actions, _ = bellman_targets(transitions, network, lagged, gamma, cfg, rng)
    return [
        LabeledSample(t, float(q), a, lagged.theta1.version)
        for t, q, a in zip(transitions, targets, next_actions)
    ]
