from .vmf import VmfDistribution, vmf_rsample, vmf_sample, vmf_score
from .ceb import CebBatch, CebOutput, ceb_loss, ceb_terms, infonce_estimate, infonce_tensor
from .estimator import episode_infonce, pad_indices

__all__ = [
    "VmfDistribution",
    "vmf_rsample",
    "vmf_sample",
    "vmf_score",
    "CebBatch",
    "CebOutput",
    "ceb_loss",
    "ceb_terms",
    "infonce_estimate",
    "infonce_tensor",
    "episode_infonce",
    "pad_indices",
]
