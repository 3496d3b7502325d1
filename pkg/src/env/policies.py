"""Reference policies: privileged scripted expert and uniform random"""

from typing import Optional, Sequence, Tuple

import numpy as np

from src.env.tabletop import TabletopEnv
from src.env.types import ACTION_DIM, Observation, Skill, TaskContext, WorldState

OPEN = 1.0
CLOSE = -1.0


class RandomPolicy:
    """Uniform in-bounds actions"""

    def __init__(self, rng: np.random.Generator, low: Sequence[float] = (-1.0,) * ACTION_DIM,
                 high: Sequence[float] = (1.0,) * ACTION_DIM):
        self.rng = rng
        self.low = np.asarray(low, dtype=np.float64)
        self.high = np.asarray(high, dtype=np.float64)

    def __call__(self, obs: Observation, context: TaskContext) -> np.ndarray:
        return self.rng.uniform(self.low, self.high)


class ScriptedExpert:
    """
    Reads the true world state of its environment and drives the gripper
    through approach / descend / grasp / lift (or lateral knock) phases.
    Built for blocking control.
    """

    def __init__(self, env: TabletopEnv):
        self.env = env
        self.max_step = env.config.max_step_cells
        self.carry_height = env.config.lift_threshold

    def __call__(self, obs: Observation, context: TaskContext) -> np.ndarray:
        state = self.env.state
        task = self.env.task
        if task.skill == Skill.PICK:
            return self._pick(state, task.targets[0], lift_to=self.carry_height)
        if task.skill == Skill.MOVE_NEAR:
            return self._move_near(state, task.targets[0], task.targets[1])
        return self._knock(state, task.targets[0])

    # ------------------------------------------------------------------ primitives

    def _action(self, dx: int = 0, dy: int = 0, dz: int = 0, gripper: float = OPEN) -> np.ndarray:
        m = self.max_step
        delta = np.clip([dx, dy, dz], -m, m) / m
        return np.array([delta[0], delta[1], delta[2], gripper], dtype=np.float64)

    def _travel(self, state: WorldState, x: int, y: int, gripper: float) -> np.ndarray:
        return self._action(dx=x - state.gripper_x, dy=y - state.gripper_y, gripper=gripper)

    def _pick(self, state: WorldState, target: str, lift_to: int) -> np.ndarray:
        if state.held == target:
            return self._action(dz=lift_to - state.gripper_z, gripper=CLOSE)
        pose = state.objects[target]
        if (state.gripper_x, state.gripper_y) != (pose.x, pose.y):
            if state.gripper_z < self.env.height:
                return self._action(dz=self.env.height - state.gripper_z, gripper=OPEN)
            return self._travel(state, pose.x, pose.y, OPEN)
        if state.aperture < 0.5:
            return self._action(gripper=OPEN)
        reaches_table = state.gripper_z - self.max_step <= 0
        return self._action(dz=-state.gripper_z, gripper=CLOSE if reaches_table else OPEN)

    def _move_near(self, state: WorldState, moved: str, anchor: str) -> np.ndarray:
        if state.held != moved:
            return self._pick(state, moved, lift_to=self.carry_height)
        if state.gripper_z < self.carry_height:
            return self._action(dz=self.carry_height - state.gripper_z, gripper=CLOSE)
        goal = self._drop_cell(state, anchor)
        if (state.gripper_x, state.gripper_y) != goal:
            return self._travel(state, goal[0], goal[1], CLOSE)
        return self._action(dz=-state.gripper_z, gripper=OPEN)

    def _knock(self, state: WorldState, target: str) -> np.ndarray:
        pose = state.objects[target]
        here = (state.gripper_x, state.gripper_y)
        approach = self._approach_cell(state, pose.x, pose.y)
        if here != approach:
            if state.gripper_z < self.env.height:
                return self._action(dz=self.env.height - state.gripper_z)
            return self._travel(state, approach[0], approach[1], OPEN)
        if state.gripper_z > 1:
            return self._action(dz=1 - state.gripper_z)
        return self._travel(state, pose.x, pose.y, OPEN)

    # ------------------------------------------------------------------ geometry

    def _neighbors(self, x: int, y: int, radius: float) -> Sequence[Tuple[int, int]]:
        g = self.env.grid_size
        r = int(np.floor(radius))
        cells = []
        for i in range(max(0, x - r), min(g, x + r + 1)):
            for j in range(max(0, y - r), min(g, y + r + 1)):
                if (i, j) != (x, y) and np.hypot(i - x, j - y) <= radius:
                    cells.append((i, j))
        return cells

    def _closest(self, state: WorldState, cells: Sequence[Tuple[int, int]]) -> Optional[Tuple[int, int]]:
        if not cells:
            return None
        gx, gy = state.gripper_x, state.gripper_y
        return min(cells, key=lambda c: (max(abs(c[0] - gx), abs(c[1] - gy)), c))

    def _drop_cell(self, state: WorldState, anchor: str) -> Tuple[int, int]:
        pose = state.objects[anchor]
        free = [c for c in self._neighbors(pose.x, pose.y, 1.5) if state.object_at(*c) is None]
        return self._closest(state, free) or (pose.x, pose.y)

    def _approach_cell(self, state: WorldState, x: int, y: int) -> Tuple[int, int]:
        cells = [c for c in self._neighbors(x, y, 1.0)]
        return self._closest(state, cells) or (x, y)
