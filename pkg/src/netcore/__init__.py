from .autograd import Tensor
from .batch import StateBatch
from .params import BlockSpec, LaggedParams, ParameterLayout, ParameterSet, gradient_vector, lag_update
from .network import Q_EPS, PIQTNetwork
from .checkpoint import CheckpointData, read_checkpoint, write_checkpoint
from .gradcheck import GradCheckResult, check_gradients

__all__ = [
    "Tensor",
    "StateBatch",
    "BlockSpec",
    "LaggedParams",
    "ParameterLayout",
    "ParameterSet",
    "gradient_vector",
    "lag_update",
    "Q_EPS",
    "PIQTNetwork",
    "CheckpointData",
    "read_checkpoint",
    "write_checkpoint",
    "GradCheckResult",
    "check_gradients",
]
