"""Episode-level mutual-information estimate from the trained encoders"""

from typing import Sequence

import numpy as np

from src.core.exceptions import UsageError
from src.env.types import Transition
from src.netcore.batch import StateBatch
from src.netcore.network import PIQTNetwork
from src.netcore.params import LaggedParams, ParameterSet
from src.pi_aux.ceb import backward_weights, infonce_estimate


def pad_indices(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """All n items once, topped up to k by sampling with replacement (first k when n >= k)"""
    if n < 1:
        raise UsageError("cannot assemble an analysis batch from zero transitions")
    if n >= k:
        return np.arange(k)
    return np.concatenate([np.arange(n), rng.integers(0, n, size=k - n)])


def episode_infonce(
    transitions: Sequence[Transition],
    next_actions: np.ndarray,
    network: PIQTNetwork,
    theta: ParameterSet,
    lagged: LaggedParams,
    kappa_b: float,
    batch_size: int,
    rng: np.random.Generator,
) -> float:
    """
    InfoNCE estimate of I(Y; Z) over one episode's transitions, z = μe(x)

    Args:
        transitions: The episode, in order
        next_actions: (n, A) CEM-optimal a' at each next state
        batch_size: Analysis batch K; short episodes are padded by resampling

    Returns:
        Estimate in nats, at most log K
    """
    if not network.has_pi_heads:
        raise UsageError("episode MI needs a network with auxiliary heads")
    idx = pad_indices(len(transitions), batch_size, rng)
    items = [transitions[i] for i in idx]
    x_states = StateBatch.from_items([t.obs for t in items], [t.context for t in items])
    y_states = StateBatch.from_items([t.next_obs for t in items], [t.context for t in items])
    x_actions = np.stack([t.action for t in items])
    rewards = np.array([t.reward for t in items])

    w = theta.bind(trainable=False)
    w_y = backward_weights(w, lagged)
    mu_e = network.forward_head(network.encode_state(x_states, x_actions, w), w).data
    mu_b = network.backward_head(network.encode_state(y_states, next_actions[idx], w_y), rewards, w_y).data
    return infonce_estimate(mu_e, mu_b, kappa_b=kappa_b)
