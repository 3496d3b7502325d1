"""Desk-scale grid tabletop with pick / move-near / knock skills"""

import math
from typing import Dict, Optional, Tuple

import numpy as np

from src.config.run_config import EnvConfig
from src.core.exceptions import ConfigurationError, UsageError
from src.env.context import make_context
from src.env.objects import get_object, object_code, object_names
from src.env.tasks import TaskRegistry
from src.env.types import (
    ACTION_DIM,
    VISUAL_CHANNELS,
    Action,
    ContextKind,
    ObjectPose,
    Observation,
    Skill,
    TaskContext,
    TaskSpec,
    WorldState,
)
from src.logging_config.logger import setup_logger

logger = setup_logger(__name__)

MAX_RESET_ATTEMPTS = 100


class TabletopEnv:
    """
    Grid-world manipulation scene.

    Objects live on integer cells at height level 0..H; the gripper moves by
    rounded relative displacements, grasps by closing over an object at table
    level and knocks knockable objects by lateral contact at height <= 1.
    One instance is owned by one caller at a time.
    """

    def __init__(self, config: EnvConfig, registry: TaskRegistry):
        self.config = config
        self.registry = registry
        self.grid_size = config.grid_size
        self.height = config.height_levels
        self.context_kind = ContextKind(config.context_kind)
        self.concurrent = config.control_mode == "concurrent"

        self._state: Optional[WorldState] = None
        self._task: Optional[TaskSpec] = None
        self._context: Optional[TaskContext] = None
        self._pending = np.zeros(ACTION_DIM)
        self._done = True
        self._success = False

    # ------------------------------------------------------------------ properties

    @property
    def state(self) -> WorldState:
        if self._state is None:
            raise UsageError("environment has not been reset")
        return self._state.copy()

    @property
    def task(self) -> TaskSpec:
        if self._task is None:
            raise UsageError("environment has not been reset")
        return self._task

    @property
    def context(self) -> TaskContext:
        if self._context is None:
            raise UsageError("environment has not been reset")
        return self._context

    @property
    def done(self) -> bool:
        return self._done

    @property
    def success(self) -> bool:
        return self._success

    @property
    def gripper_home(self) -> Tuple[int, int, int]:
        return self.grid_size // 2, self.grid_size // 2, self.height

    # ------------------------------------------------------------------ episode API

    def reset(self, task: TaskSpec | str, seed: int) -> Tuple[Observation, TaskContext]:
        """
        Start an episode

        Args:
            task: TaskSpec or task id from the registry
            seed: Scene seed; same (task, seed) gives the same scene

        Returns:
            First observation and the frozen task context

        Raises:
            RegistryError for tasks outside the registry
        """
        task_id = task.task_id if isinstance(task, TaskSpec) else task
        spec = self.registry.get(task_id)
        rng = np.random.default_rng(seed)

        for _ in range(MAX_RESET_ATTEMPTS):
            state = self._sample_scene(spec, rng)
            if not self._is_success(spec, state):
                break
        else:
            raise ConfigurationError(f"could not sample a non-successful scene for {spec.task_id}")

        self._state = state
        self._task = spec
        self._pending = np.zeros(ACTION_DIM)
        self._done = False
        self._success = False

        obs = self.observe()
        target_cells = [(state.objects[n].x, state.objects[n].y) for n in spec.targets]
        self._context = make_context(self.context_kind, spec, obs.visual, target_cells, self.config.mask_size)
        return obs, self._context

    def step(self, action: Action | np.ndarray) -> Tuple[Observation, float, bool]:
        """
        Advance one step

        Args:
            action: Action or raw (dx, dy, dz, gripper) vector; components are clipped to [-1, 1]

        Returns:
            (observation, reward in {0, 1}, done)

        Raises:
            UsageError when the episode is finished or the action is not finite
        """
        if self._state is None or self._done:
            raise UsageError("step() called on a finished episode; call reset() first")
        submitted = action.vector if isinstance(action, Action) else Action(np.asarray(action)).vector

        if self.concurrent:
            applied, self._pending = self._pending, np.array(submitted)
        else:
            applied = submitted

        self._apply(self._state, applied)
        self._state.step += 1

        self._success = self._is_success(self._task, self._state)
        reward = 1.0 if self._success else 0.0
        self._done = self._success or self._state.step >= self.config.step_limit
        return self.observe(), reward, self._done

    def observe(self) -> Observation:
        state = self._state
        g = self.grid_size
        visual = np.zeros((g, g, VISUAL_CHANNELS), dtype=np.float64)
        for pose in state.objects.values():
            code = object_code(pose.name) * (1.0 if pose.upright else 0.5)
            visual[pose.x, pose.y, 0] = max(visual[pose.x, pose.y, 0], code)
            visual[pose.x, pose.y, 1] = max(visual[pose.x, pose.y, 1], pose.z / self.height)
        visual[state.gripper_x, state.gripper_y, 2] = 1.0
        proprio = np.array([
            state.gripper_x / (g - 1),
            state.gripper_y / (g - 1),
            state.gripper_z / self.height,
            state.aperture,
        ])
        return Observation(visual=visual, proprio=proprio)

    # ------------------------------------------------------------------ internals

    def _sample_scene(self, task: TaskSpec, rng: np.random.Generator) -> WorldState:
        others = [n for n in object_names() if n not in task.targets]
        n_distractors = min(self.config.n_distractors, len(others))
        distractors = [str(n) for n in rng.choice(others, size=n_distractors, replace=False)] if n_distractors else []
        names = list(task.targets) + distractors

        hx, hy, hz = self.gripper_home
        home_cell = hx * self.grid_size + hy
        free_cells = np.array([c for c in range(self.grid_size * self.grid_size) if c != home_cell])
        if len(names) > len(free_cells):
            raise ConfigurationError("grid too small for the requested objects")
        cells = rng.choice(free_cells, size=len(names), replace=False)

        objects: Dict[str, ObjectPose] = {}
        for name, cell in zip(names, cells):
            objects[name] = ObjectPose(name=name, x=int(cell) // self.grid_size, y=int(cell) % self.grid_size)
        return WorldState(objects=objects, gripper_x=hx, gripper_y=hy, gripper_z=hz)

    def _apply(self, state: WorldState, vector: np.ndarray) -> None:
        g, h = self.grid_size, self.height
        delta = np.rint(vector[:3] * self.config.max_step_cells).astype(int)
        nx = int(np.clip(state.gripper_x + delta[0], 0, g - 1))
        ny = int(np.clip(state.gripper_y + delta[1], 0, g - 1))
        nz = int(np.clip(state.gripper_z + delta[2], 0, h))
        lateral = (nx, ny) != (state.gripper_x, state.gripper_y)

        if lateral and nz <= 1:
            for pose in state.objects.values():
                if (pose.name != state.held and pose.x == nx and pose.y == ny
                        and pose.upright and get_object(pose.name).knockable):
                    pose.upright = False

        state.gripper_x, state.gripper_y, state.gripper_z = nx, ny, nz

        was_open = state.aperture >= 0.5
        state.aperture = float((vector[3] + 1.0) / 2.0)
        closed = state.aperture < 0.5

        if state.held is not None:
            held = state.objects[state.held]
            if closed:
                held.x, held.y, held.z = nx, ny, nz
            else:
                held.x, held.y, held.z = nx, ny, 0
                state.held = None
        elif closed and was_open and nz == 0:
            target = state.object_at(nx, ny)
            if target is not None and target.z == 0:
                state.held = target.name

    def _is_success(self, task: TaskSpec, state: WorldState) -> bool:
        if task.skill == Skill.PICK:
            return state.held == task.targets[0] and state.gripper_z >= self.config.lift_threshold
        if task.skill == Skill.MOVE_NEAR:
            a = state.objects[task.targets[0]]
            b = state.objects[task.targets[1]]
            on_table = a.z == 0 and b.z == 0 and state.held not in task.targets
            return on_table and math.hypot(a.x - b.x, a.y - b.y) <= self.config.near_radius
        return not state.objects[task.targets[0]].upright
