from .cem import cem_optimize, cem_select_action
from .bellman import LabeledSample, bellman_target, bellman_targets, label_transitions, targets_from_values
from .losses import LossOutput, bellman_loss, bellman_loss_tensor, combined_loss, td_errors
from .policy import CemPolicy

__all__ = [
    "cem_optimize",
    "cem_select_action",
    "LabeledSample",
    "bellman_target",
    "bellman_targets",
    "label_transitions",
    "targets_from_values",
    "LossOutput",
    "bellman_loss",
    "bellman_loss_tensor",
    "combined_loss",
    "td_errors",
    "CemPolicy",
]
