"""Task registry: procedurally generated skill families with a train / held-out split"""

import math
from typing import Dict, Iterator, List, Set, Tuple

from src.config.run_config import EnvConfig, TaskFamilyConfig
from src.core.exceptions import ConfigurationError, RegistryError
from src.env.objects import get_object, is_known, knockable_names, object_names
from src.env.types import Skill, Split, TaskSpec
from src.logging_config.logger import setup_logger
from src.utils.seeding import derive_rng

logger = setup_logger(__name__)


class TaskRegistry:
    """Ordered task list; a task's position is its embedding-table row"""

    def __init__(self, tasks: List[TaskSpec]):
        self.tasks = list(tasks)
        self._by_id: Dict[str, TaskSpec] = {t.task_id: t for t in self.tasks}
        if len(self._by_id) != len(self.tasks):
            raise ConfigurationError("duplicate task ids in registry")

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self) -> Iterator[TaskSpec]:
        return iter(self.tasks)

    def __contains__(self, task_id: str) -> bool:
        return task_id in self._by_id

    def get(self, task_id: str) -> TaskSpec:
        try:
            return self._by_id[task_id]
        except KeyError:
            raise RegistryError(f"Unknown task: {task_id}") from None

    def split(self, split: Split | str) -> List[TaskSpec]:
        split = Split(split)
        return [t for t in self.tasks if t.split == split]

    @property
    def train(self) -> List[TaskSpec]:
        return self.split(Split.TRAIN)

    @property
    def heldout(self) -> List[TaskSpec]:
        return self.split(Split.HELDOUT)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _family_objects(family: TaskFamilyConfig) -> List[str]:
    skill = Skill(family.skill)
    if family.objects is None:
        objects = knockable_names() if skill == Skill.KNOCK else object_names()
    else:
        objects = list(dict.fromkeys(family.objects))
    for name in objects:
        if not is_known(name):
            raise ConfigurationError(f"family {skill.value}: unknown object {name}")
        if skill == Skill.KNOCK and not get_object(name).knockable:
            raise ConfigurationError(f"family knock: {name} is not knockable")
    if len(objects) < 2:
        raise ConfigurationError(f"family {skill.value} needs at least 2 objects, got {len(objects)}")
    return objects


def _family_targets(skill: Skill, objects: List[str]) -> List[Tuple[str, ...]]:
    if skill == Skill.MOVE_NEAR:
        return [(a, b) for a in objects for b in objects if a != b]
    return [(o,) for o in objects]


def _apportion(total: int, sizes: List[int]) -> List[int]:
    """Largest-remainder split of total over sizes; ties go to the earlier family"""
    weight = sum(sizes)
    if total <= 0 or weight == 0:
        return [0] * len(sizes)
    exact = [total * s / weight for s in sizes]
    shares = [int(math.floor(e)) for e in exact]
    left = total - sum(shares)
    for i in sorted(range(len(sizes)), key=lambda i: (shares[i] - exact[i], i))[:left]:
        shares[i] += 1
    return shares


def task_registry(config: EnvConfig) -> TaskRegistry:
    """
    Generate all tasks of the configured families and split them deterministically

    Held-out tasks are (1) novel compositions: round(holdout_fraction * total) over the
    whole registry, apportioned across families by size; and (2) for Pick/Knock families
    with holdout_objects, every task touching an object withheld from training altogether.

    Args:
        config: EnvConfig (families, holdout_fraction, split_seed)

    Returns:
        TaskRegistry

    Raises:
        ConfigurationError for unknown objects, families smaller than 2 objects,
        or families too small to withhold an object
    """
    rng = derive_rng(config.split_seed, "task-split")
    frac = config.holdout_fraction

    families: List[Tuple[TaskFamilyConfig, List[Tuple[str, ...]]]] = []
    novel: Set[str] = set()
    for family in config.families:
        skill = Skill(family.skill)
        objects = _family_objects(family)
        families.append((family, _family_targets(skill, objects)))
        if family.holdout_objects:
            if skill == Skill.MOVE_NEAR:
                raise ConfigurationError("holdout_objects is only supported for pick and knock families")
            n_novel = max(1, _round_half_up(frac * len(objects)))
            if n_novel >= len(objects):
                raise ConfigurationError(
                    f"family {skill.value} with {len(objects)} objects is too small to hold out {n_novel}"
                )
            chosen = rng.choice(sorted(objects), size=n_novel, replace=False)
            novel.update(str(name) for name in chosen)

    seen: Set[str] = set()
    per_family: List[Tuple[Skill, List[Tuple[str, ...]], Set[int]]] = []
    for family, targets in families:
        skill = Skill(family.skill)
        fresh = [t for t in targets if ":".join((skill.value, *t)) not in seen]
        seen.update(":".join((skill.value, *t)) for t in fresh)
        forced = {i for i, t in enumerate(fresh) if novel.intersection(t)}
        per_family.append((skill, fresh, forced))

    # one held-out count for the whole registry; novel-object tasks count toward it
    n_total = sum(len(fresh) for _, fresh, _ in per_family)
    n_held = _round_half_up(frac * n_total)
    if frac > 0 and n_total >= 2:
        n_held = min(max(1, n_held), n_total - 1)
    n_forced = sum(len(forced) for _, _, forced in per_family)
    quotas = _apportion(
        max(0, n_held - n_forced),
        [len(fresh) - len(forced) for _, fresh, forced in per_family],
    )

    tasks: List[TaskSpec] = []
    for (skill, fresh, forced), quota in zip(per_family, quotas):
        remaining = [i for i in range(len(fresh)) if i not in forced]
        order = rng.permutation(len(remaining))
        held = forced | {remaining[j] for j in order[:quota]}
        for i, t in enumerate(fresh):
            split = Split.HELDOUT if i in held else Split.TRAIN
            tasks.append(TaskSpec(skill=skill, targets=t, split=split, index=len(tasks)))

    registry = TaskRegistry(tasks)
    if not registry.train:
        raise ConfigurationError("task split left no training tasks")
    logger.info(
        f"Task registry: {len(registry.train)} train / {len(registry.heldout)} heldout "
        f"(novel objects: {sorted(novel) or 'none'})"
    )
    return registry
