"""Task-context construction: skill-coded square overlays and embedding references"""

from typing import Dict, Sequence, Tuple

import numpy as np

from src.env.types import ContextKind, Skill, TaskContext, TaskSpec

# Grayscale skill codes per target slot
SKILL_INTENSITY: Dict[Tuple[Skill, int], float] = {
    (Skill.PICK, 0): 1.0,
    (Skill.MOVE_NEAR, 0): 0.8,
    (Skill.MOVE_NEAR, 1): 0.6,
    (Skill.KNOCK, 0): 0.4,
}


def square_bounds(x: int, y: int, mask_size: int, grid_size: int) -> Tuple[slice, slice]:
    """Index slices of the mask_size square centered on (x, y), clipped to the grid"""
    half = mask_size // 2
    return (
        slice(max(0, x - half), min(grid_size, x + half + 1)),
        slice(max(0, y - half), min(grid_size, y + half + 1)),
    )


def build_overlay(
    task: TaskSpec,
    target_cells: Sequence[Tuple[int, int]],
    grid_size: int,
    mask_size: int,
) -> np.ndarray:
    """G x G x 1 overlay: nonzero only inside squares centered on the target cells"""
    overlay = np.zeros((grid_size, grid_size, 1), dtype=np.float64)
    for slot, (x, y) in enumerate(target_cells):
        xs, ys = square_bounds(x, y, mask_size, grid_size)
        value = SKILL_INTENSITY[(task.skill, slot)]
        overlay[xs, ys, 0] = np.maximum(overlay[xs, ys, 0], value)
    return overlay


def make_context(
    kind: ContextKind,
    task: TaskSpec,
    first_frame: np.ndarray,
    target_cells: Sequence[Tuple[int, int]],
    mask_size: int,
) -> TaskContext:
    """Freeze the episode context from the first frame"""
    if kind == ContextKind.EMBEDDING:
        return TaskContext(kind=kind, task_index=task.index)
    grid_size = first_frame.shape[0]
    overlay = build_overlay(task, target_cells, grid_size, mask_size)
    return TaskContext(kind=kind, task_index=task.index, first_frame=first_frame, overlay=overlay)
