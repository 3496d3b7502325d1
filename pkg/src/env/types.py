"""Value types shared by the environment, the networks and the pipeline"""

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from src.core.exceptions import ConfigurationError, UsageError
from src.env.objects import get_object

ACTION_DIM = 4
PROPRIO_DIM = 4
VISUAL_CHANNELS = 3
CONTEXT_CHANNELS = VISUAL_CHANNELS + 1


class Skill(str, Enum):
    PICK = "pick"
    MOVE_NEAR = "move_near"
    KNOCK = "knock"


class Split(str, Enum):
    TRAIN = "train"
    HELDOUT = "heldout"


class ContextKind(str, Enum):
    IMAGE_MASK = "image_mask"
    EMBEDDING = "embedding"


@dataclass(frozen=True)
class TaskSpec:
    """One task: a skill applied to 1 (Pick/Knock) or 2 (MoveNear) target objects"""

    skill: Skill
    targets: Tuple[str, ...]
    split: Split = Split.TRAIN
    index: int = 0

    def __post_init__(self):
        expected = 2 if self.skill == Skill.MOVE_NEAR else 1
        if len(self.targets) != expected:
            raise ConfigurationError(
                f"{self.skill.value} task needs {expected} target(s), got {len(self.targets)}"
            )
        if self.skill == Skill.MOVE_NEAR and self.targets[0] == self.targets[1]:
            raise ConfigurationError("move_near targets must be distinct")
        for name in self.targets:
            obj = get_object(name)
            if self.skill == Skill.KNOCK and not obj.knockable:
                raise ConfigurationError(f"{name} cannot be knocked over")

    @property
    def task_id(self) -> str:
        return ":".join((self.skill.value, *self.targets))


@dataclass
class ObjectPose:
    name: str
    x: int
    y: int
    z: int = 0
    upright: bool = True


@dataclass
class WorldState:
    """Full simulator state; objects keyed by catalog name"""

    objects: Dict[str, ObjectPose]
    gripper_x: int
    gripper_y: int
    gripper_z: int
    aperture: float = 1.0
    held: Optional[str] = None
    step: int = 0

    def copy(self) -> "WorldState":
        return copy.deepcopy(self)

    def object_at(self, x: int, y: int, exclude: Optional[str] = None) -> Optional[ObjectPose]:
        for pose in self.objects.values():
            if pose.name != exclude and pose.x == x and pose.y == y and pose.name != self.held:
                return pose
        return None


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Observation:
    """s = (s_v, s_p): G x G x 3 grid and (x, y, z, aperture), all in [0, 1]"""

    visual: np.ndarray
    proprio: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "visual", _frozen(self.visual))
        object.__setattr__(self, "proprio", _frozen(self.proprio))


@dataclass(frozen=True)
class TaskContext:
    """
    Episode-constant task conditioning.
    ImageMask: first frame (G x G x 3) + skill-coded overlay (G x G x 1).
    Embedding: row index into the learned task table.
    """

    kind: ContextKind
    task_index: int
    first_frame: Optional[np.ndarray] = None
    overlay: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == ContextKind.IMAGE_MASK:
            if self.first_frame is None or self.overlay is None:
                raise ConfigurationError("image_mask context needs first_frame and overlay")
            object.__setattr__(self, "first_frame", _frozen(self.first_frame))
            object.__setattr__(self, "overlay", _frozen(self.overlay))

    def channels(self) -> np.ndarray:
        """Context image stacked along channels (G x G x 4)"""
        if self.kind != ContextKind.IMAGE_MASK:
            raise UsageError("embedding contexts have no image channels")
        return np.concatenate([self.first_frame, self.overlay], axis=-1)


@dataclass(frozen=True)
class Action:
    """(dx, dy, dz, gripper) each in [-1, 1]; gripper < 0 closes, >= 0 opens"""

    vector: np.ndarray = field(default_factory=lambda: np.zeros(ACTION_DIM))

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64).reshape(-1)
        if vec.shape != (ACTION_DIM,):
            raise ConfigurationError(f"action must have {ACTION_DIM} components, got {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise UsageError("action must be finite")
        object.__setattr__(self, "vector", _frozen(np.clip(vec, -1.0, 1.0)))


@dataclass(frozen=True)
class Transition:
    """One environment step; the unit of replay"""

    obs: Observation
    action: np.ndarray
    reward: float
    next_obs: Observation
    done: bool
    context: TaskContext
    task_id: str

    def __post_init__(self):
        if self.reward not in (0.0, 1.0):
            raise UsageError(f"reward must be binary, got {self.reward}")
        if self.reward == 1.0 and not self.done:
            raise UsageError("a rewarded transition must be terminal")
        object.__setattr__(self, "action", _frozen(self.action))
