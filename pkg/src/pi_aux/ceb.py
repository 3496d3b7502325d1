"""CEB objective with its contrastive InfoNCE term"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.config.run_config import AuxConfig
from src.core.exceptions import UsageError
from src.netcore import autograd as ag
from src.netcore.autograd import Tensor
from src.netcore.batch import StateBatch
from src.netcore.network import PI_BACKWARD_PREFIX, PIQTNetwork
from src.netcore.params import LaggedParams, ParameterSet
from src.pi_aux.vmf import VmfDistribution, vmf_rsample


@dataclass
class CebBatch:
    """
    K paired items: X = (s, a, ctx), Y = (s', a', r, ctx).
    The version stamps name the θ and θ̄1 the batch is meant to be scored with;
    label_versions, when given, are the per-item θ̄1 versions that produced the targets.
    """

    x_states: StateBatch
    x_actions: np.ndarray
    y_states: StateBatch
    y_actions: np.ndarray
    rewards: np.ndarray
    beta: float
    forward_version: int
    backward_version: int
    label_versions: Tuple[int, ...] = ()

    def __post_init__(self):
        k = self.x_states.size
        if k < 1:
            raise UsageError("CEB batch needs at least one item")
        if not (self.y_states.size == k == len(self.x_actions) == len(self.y_actions) == len(self.rewards)):
            raise UsageError("CEB batch sides must pair up item by item")
        if self.label_versions and len(self.label_versions) != k:
            raise UsageError("label_versions must have one entry per item")

    @property
    def size(self) -> int:
        return self.x_states.size


@dataclass
class CebOutput:
    loss: float
    residual: float
    infonce: float
    scores: np.ndarray
    loss_tensor: Optional[Tensor] = None
    metadata: Dict[str, object] = field(default_factory=lambda: {"residual_up_to_constant": True})


def _as_means(backward: Union[np.ndarray, Sequence[VmfDistribution]]) -> Tuple[np.ndarray, Optional[float]]:
    if isinstance(backward, np.ndarray):
        return backward, None
    kappas = {d.kappa for d in backward}
    if len(kappas) != 1:
        raise UsageError("backward distributions must share one concentration")
    return np.stack([d.mu for d in backward]), kappas.pop()


def infonce_estimate(
    z: np.ndarray,
    backward: Union[np.ndarray, Sequence[VmfDistribution]],
    kappa_b: Optional[float] = None,
) -> float:
    """
    mean_i [ s(z_i, b_i) - logsumexp_k s(z_i, b_k) + log K ] with s = κb μ_k·z_i

    Args:
        z: (K, d) samples
        backward: K VmfDistributions, or a (K, d) array of mean directions with kappa_b
        kappa_b: Concentration when `backward` is an array

    Raises:
        UsageError for K = 0 or mismatched sides
    """
    z = np.asarray(z, dtype=np.float64)
    if len(z) == 0 or len(backward) == 0:
        raise UsageError("InfoNCE needs at least one pair")
    mu_b, kappa = _as_means(backward)
    kappa = kappa if kappa is not None else kappa_b
    if kappa is None:
        raise UsageError("kappa_b is required with raw mean directions")
    if mu_b.shape != z.shape:
        raise UsageError(f"z {z.shape} and backward means {mu_b.shape} must pair up")
    estimate, _ = infonce_tensor(Tensor(z), Tensor(mu_b), kappa)
    return float(estimate.data)


def infonce_tensor(z: Tensor, mu_b: Tensor, kappa_b: float) -> Tuple[Tensor, Tensor]:
    """InfoNCE estimate as a graph node, plus the (K, K) score matrix scores[i, k] = κb μ_k·z_i"""
    k = z.shape[0]
    scores = ag.mul(ag.matmul(z, ag.transpose(mu_b)), kappa_b)
    positives = ag.sum(ag.mul(scores, np.eye(k)), axis=1)
    per_item = ag.add(ag.sub(positives, ag.logsumexp(scores, axis=1)), float(np.log(k)))
    return ag.mean(per_item), scores


def ceb_terms(
    mu_e: Tensor,
    mu_b: Tensor,
    z: Tensor,
    beta: float,
    kappa_e: float,
    kappa_b: float,
) -> Tuple[Tensor, Tensor, Tensor, Tensor]:
    """
    loss = mean_i β (κe μe_i·z_i - κb μb_i·z_i) - InfoNCE(z, μb)

    Returns:
        (loss, residual, infonce, scores) graph nodes
    """
    log_e = ag.mul(ag.sum(ag.mul(mu_e, z), axis=1), kappa_e)
    log_b = ag.mul(ag.sum(ag.mul(mu_b, z), axis=1), kappa_b)
    residual = ag.mul(ag.mean(ag.sub(log_e, log_b)), beta)
    infonce, scores = infonce_tensor(z, mu_b, kappa_b)
    return ag.sub(residual, infonce), residual, infonce, scores


def backward_weights(theta_weights: Dict[str, Tensor], lagged: LaggedParams) -> Dict[str, Tensor]:
    """θ̄1's frozen encoder under θ's trainable backward MLP"""
    frozen = lagged.theta1.bind(trainable=False)
    return {
        name: (theta_weights[name] if name.startswith(PI_BACKWARD_PREFIX) else frozen[name])
        for name in frozen
    }


def ceb_loss(
    batch: CebBatch,
    network: PIQTNetwork,
    theta: ParameterSet,
    lagged: LaggedParams,
    aux: AuxConfig,
    rng: Optional[np.random.Generator] = None,
    weights: Optional[Dict[str, Tensor]] = None,
    embedding_x: Optional[Tensor] = None,
) -> CebOutput:
    """
    CEB loss for a batch

    Args:
        batch: CebBatch stamped with the versions of theta and lagged.theta1
        network: PIQTNetwork with auxiliary heads
        theta: Learner parameters (forward side)
        lagged: Lagged parameters; θ̄1 supplies the frozen y-side encoder
        aux: beta / kappas / deterministic_forward
        rng: Sampling stream, required unless deterministic_forward
        weights: Already bound θ leaves, to share one backward pass with other losses
        embedding_x: Already computed x-side embedding under `weights`

    Raises:
        UsageError on version mismatch, labels newer than lagged.theta1,
        or a network without auxiliary heads
    """
    if batch.forward_version != theta.version or batch.backward_version != lagged.theta1.version:
        raise UsageError(
            f"CEB batch stamped (θ v{batch.forward_version}, θ̄1 v{batch.backward_version}) "
            f"but scored with (θ v{theta.version}, θ̄1 v{lagged.theta1.version})"
        )
    if batch.label_versions and max(batch.label_versions) > lagged.theta1.version:
        raise UsageError(
            f"CEB batch labeled under θ̄1 v{max(batch.label_versions)}, newer than the scoring θ̄1 "
            f"v{lagged.theta1.version}"
        )
    if not network.has_pi_heads:
        raise UsageError("CEB loss needs a network with auxiliary heads")
    if not aux.deterministic_forward and rng is None:
        raise UsageError("stochastic CEB path needs a random generator")

    w = weights if weights is not None else theta.bind(trainable=True)
    if embedding_x is None:
        embedding_x = network.encode_state(batch.x_states, batch.x_actions, w)
    w_y = backward_weights(w, lagged)
    embedding_y = network.encode_state(batch.y_states, batch.y_actions, w_y)

    mu_e = network.forward_head(embedding_x, w)
    mu_b = network.backward_head(embedding_y, batch.rewards, w_y)
    z = vmf_rsample(mu_e, aux.kappa_e, rng, deterministic=aux.deterministic_forward)

    loss, residual, infonce, scores = ceb_terms(mu_e, mu_b, z, batch.beta, aux.kappa_e, aux.kappa_b)
    return CebOutput(
        loss=float(loss.data),
        residual=float(residual.data),
        infonce=float(infonce.data),
        scores=scores.data.copy(),
        loss_tensor=loss,
    )
