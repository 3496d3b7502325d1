"""von Mises-Fisher distributions on the unit sphere: sampling and scoring"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.exceptions import NumericError, UsageError
from src.netcore import autograd as ag
from src.netcore.autograd import Tensor

MAX_REJECTION_ITERATIONS = 1000
UNIT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class VmfDistribution:
    """Mean direction μ (unit) and concentration κ > 0"""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64).reshape(-1)
        if abs(np.linalg.norm(mu) - 1.0) > UNIT_TOLERANCE:
            raise UsageError(f"vMF mean direction must be unit length, got norm {np.linalg.norm(mu):.12f}")
        if not self.kappa > 0:
            raise UsageError(f"vMF concentration must be positive, got {self.kappa}")
        object.__setattr__(self, "mu", mu)

    @property
    def dim(self) -> int:
        return int(self.mu.size)


def sample_cosines(kappa: float, dim: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Wood's rejection sampler for w = μ·z

    Raises:
        NumericError when acceptance takes more than MAX_REJECTION_ITERATIONS rounds
    """
    m = dim - 1
    b = m / (np.sqrt(4.0 * kappa ** 2 + m ** 2) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * np.log(1.0 - x0 ** 2)

    w = np.empty(size)
    pending = np.arange(size)
    for _ in range(MAX_REJECTION_ITERATIONS):
        if pending.size == 0:
            return w
        z = rng.beta(m / 2.0, m / 2.0, size=pending.size)
        cand = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=pending.size)
        accept = kappa * cand + m * np.log(1.0 - x0 * cand) - c >= np.log(u)
        w[pending[accept]] = cand[accept]
        pending = pending[~accept]
    if pending.size == 0:
        return w
    raise NumericError(
        f"vMF rejection sampler did not accept {pending.size} samples in {MAX_REJECTION_ITERATIONS} rounds"
    )


def base_samples(kappa: float, dim: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """(size, dim) vMF samples around e1: [w, sqrt(1 - w²) v] with v uniform on the tangent sphere"""
    w = sample_cosines(kappa, dim, size, rng)
    v = rng.standard_normal((size, dim - 1))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return np.concatenate([w[:, None], np.sqrt(np.clip(1.0 - w ** 2, 0.0, None))[:, None] * v], axis=1)


def _rotate_from_e1(mu: np.ndarray, base: np.ndarray) -> np.ndarray:
    # Householder reflection H with H e1 = mu
    e1 = np.zeros_like(mu)
    e1[..., 0] = 1.0
    u = e1 - mu
    norm = np.linalg.norm(u, axis=-1, keepdims=True)
    u = np.divide(u, norm, out=np.zeros_like(u), where=norm > 1e-12)
    return base - 2.0 * u * np.sum(u * base, axis=-1, keepdims=True)


def vmf_sample(
    dist: VmfDistribution,
    rng: np.random.Generator | int,
    n: Optional[int] = None,
    deterministic: bool = False,
) -> np.ndarray:
    """
    Draw from a vMF distribution

    Args:
        dist: VmfDistribution
        rng: Generator or seed
        n: Number of samples (None returns a single vector)
        deterministic: Return μ itself

    Returns:
        (dim,) or (n, dim) unit vectors
    """
    count = 1 if n is None else n
    if deterministic:
        out = np.tile(dist.mu, (count, 1))
    else:
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        base = base_samples(dist.kappa, dist.dim, count, rng)
        out = _rotate_from_e1(dist.mu[None, :], base)
        out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out[0] if n is None else out


def vmf_rsample(mu: Tensor, kappa: float, rng: np.random.Generator, deterministic: bool = False) -> Tensor:
    """
    Reparameterized sample for a batch of mean directions (K, d)

    The base sample around e1 does not depend on μ; the reflection taking
    e1 to μ carries the gradient back to μ.
    """
    if deterministic:
        return mu
    k, dim = mu.shape
    base = base_samples(kappa, dim, k, rng)
    e1 = np.zeros((k, dim))
    e1[:, 0] = 1.0
    u = ag.l2_normalize(ag.sub(e1, mu))
    proj = ag.sum(ag.mul(u, base), axis=1, keepdims=True)
    return ag.sub(base, ag.mul(ag.mul(u, proj), 2.0))


def vmf_score(z: np.ndarray, dist: VmfDistribution) -> float:
    """Unnormalized log density κ μ·z; the normalizer C_d(κ) is omitted"""
    return float(dist.kappa * np.dot(dist.mu, np.asarray(z, dtype=np.float64)))
