"""Stacked network inputs"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.core.exceptions import ConfigurationError, UsageError
from src.env.types import ContextKind, Observation, TaskContext


@dataclass(frozen=True)
class StateBatch:
    """
    B states with their task contexts.

    visual: (B, G, G, 3); proprio: (B, 4);
    context_image: (B, G, G, 4) for image contexts, else None;
    task_index: (B,) ints for embedding contexts, else None
    """

    visual: np.ndarray
    proprio: np.ndarray
    context_image: Optional[np.ndarray] = None
    task_index: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.visual.shape[0]
        if self.proprio.shape[0] != n:
            raise ConfigurationError("visual and proprio batch sizes differ")
        if self.context_image is not None and self.context_image.shape[0] != n:
            raise ConfigurationError("context batch size differs from state batch size")
        if self.task_index is not None and self.task_index.shape[0] != n:
            raise ConfigurationError("task index batch size differs from state batch size")

    @property
    def size(self) -> int:
        return int(self.visual.shape[0])

    @property
    def context_kind(self) -> ContextKind:
        return ContextKind.IMAGE_MASK if self.context_image is not None else ContextKind.EMBEDDING

    @classmethod
    def from_items(cls, observations: Sequence[Observation], contexts: Sequence[TaskContext]) -> "StateBatch":
        if not observations:
            raise UsageError("cannot build an empty state batch")
        if len(observations) != len(contexts):
            raise ConfigurationError("observations and contexts must pair up")
        kinds = {c.kind for c in contexts}
        if len(kinds) != 1:
            raise ConfigurationError("mixed context kinds in one batch")
        visual = np.stack([o.visual for o in observations])
        proprio = np.stack([o.proprio for o in observations])
        if kinds.pop() == ContextKind.IMAGE_MASK:
            return cls(visual, proprio, context_image=np.stack([c.channels() for c in contexts]))
        return cls(visual, proprio, task_index=np.array([c.task_index for c in contexts], dtype=np.int64))
