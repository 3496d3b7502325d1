from .types import (
    ACTION_DIM,
    PROPRIO_DIM,
    VISUAL_CHANNELS,
    CONTEXT_CHANNELS,
    Action,
    ContextKind,
    ObjectPose,
    Observation,
    Skill,
    Split,
    TaskContext,
    TaskSpec,
    Transition,
    WorldState,
)
from .tasks import TaskRegistry, task_registry
from .tabletop import TabletopEnv
from .policies import RandomPolicy, ScriptedExpert

__all__ = [
    "ACTION_DIM",
    "PROPRIO_DIM",
    "VISUAL_CHANNELS",
    "CONTEXT_CHANNELS",
    "Action",
    "ContextKind",
    "ObjectPose",
    "Observation",
    "Skill",
    "Split",
    "TaskContext",
    "TaskSpec",
    "Transition",
    "WorldState",
    "TaskRegistry",
    "task_registry",
    "TabletopEnv",
    "RandomPolicy",
    "ScriptedExpert",
]
