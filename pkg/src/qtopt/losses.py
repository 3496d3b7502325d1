"""Cross-entropy Bellman loss and the combined PI-QT-Opt objective"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.config.run_config import AuxConfig
from src.core.exceptions import TrainingError, UsageError
from src.netcore import autograd as ag
from src.netcore.autograd import Tensor
from src.netcore.batch import StateBatch
from src.netcore.network import Q_EPS, PIQTNetwork
from src.netcore.params import LaggedParams, ParameterSet, gradient_vector
from src.pi_aux.ceb import CebBatch, CebOutput, ceb_loss
from src.qtopt.bellman import LabeledSample


def bellman_loss(q_pred: np.ndarray, targets: np.ndarray) -> float:
    """Mean binary cross-entropy between clamped predictions and targets"""
    q = np.clip(np.asarray(q_pred, dtype=np.float64), Q_EPS, 1.0 - Q_EPS)
    t = np.asarray(targets, dtype=np.float64)
    return float(np.mean(-(t * np.log(q) + (1.0 - t) * np.log(1.0 - q))))


def bellman_loss_tensor(q_pred: Tensor, targets: np.ndarray) -> Tensor:
    q = ag.clip(q_pred, Q_EPS, 1.0 - Q_EPS)
    t = np.asarray(targets, dtype=np.float64)
    per_item = ag.add(ag.mul(ag.log(q), t), ag.mul(ag.log(ag.sub(1.0, q)), 1.0 - t))
    return ag.mul(ag.mean(per_item), -1.0)


def td_errors(q_pred: np.ndarray, targets: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(q_pred, dtype=np.float64) - np.asarray(targets, dtype=np.float64))


@dataclass
class LossOutput:
    total: float
    bellman: float
    gradient: np.ndarray
    td_error_mean: float
    target_mean: float
    ceb: Optional[CebOutput] = None


def combined_loss(
    samples: Sequence[LabeledSample],
    network: PIQTNetwork,
    theta: ParameterSet,
    lagged: LaggedParams,
    aux: AuxConfig,
    rng: Optional[np.random.Generator] = None,
) -> LossOutput:
    """
    bellman_weight * Bellman + ceb_weight * CEB with one backward pass

    With the auxiliary disabled the CEB term is never built, so the result
    equals the plain QT-Opt loss and gradient.

    Raises:
        UsageError on an empty batch, samples labeled under a θ̄1 newer than `lagged`,
        or a network without auxiliary heads
        TrainingError on a non-finite loss or gradient
    """
    if not samples:
        raise UsageError("combined loss needs at least one labeled sample")
    newest_label = max(s.target_version for s in samples)
    if newest_label > lagged.theta1.version:
        raise UsageError(
            f"samples labeled under θ̄1 v{newest_label} but lagged parameters are at v{lagged.theta1.version}"
        )
    transitions = [s.transition for s in samples]
    contexts = [t.context for t in transitions]
    x_states = StateBatch.from_items([t.obs for t in transitions], contexts)
    x_actions = np.stack([t.action for t in transitions])
    targets = np.array([s.target for s in samples], dtype=np.float64)

    w = theta.bind(trainable=True)
    embedding = network.encode_state(x_states, x_actions, w)
    q = network.q_value(embedding, w)
    bellman = bellman_loss_tensor(q, targets)
    total = ag.mul(bellman, aux.bellman_weight)

    ceb_out = None
    if aux.enabled:
        batch = CebBatch(
            x_states=x_states,
            x_actions=x_actions,
            y_states=StateBatch.from_items([t.next_obs for t in transitions], contexts),
            y_actions=np.stack([s.next_action for s in samples]),
            rewards=np.array([t.reward for t in transitions], dtype=np.float64),
            beta=aux.beta,
            forward_version=theta.version,
            backward_version=lagged.theta1.version,
            label_versions=tuple(s.target_version for s in samples),
        )
        ceb_out = ceb_loss(batch, network, theta, lagged, aux, rng, weights=w, embedding_x=embedding)
        total = ag.add(total, ag.mul(ceb_out.loss_tensor, aux.ceb_weight))

    if not np.isfinite(total.data):
        raise TrainingError(f"non-finite loss at parameter version {theta.version}")
    gradient = gradient_vector(total, w, theta.layout)
    return LossOutput(
        total=float(total.data),
        bellman=float(bellman.data),
        gradient=gradient,
        td_error_mean=float(td_errors(q.data, targets).mean()),
        target_mean=float(targets.mean()),
        ceb=ceb_out,
    )
