"""Success-rate evaluation over a task split"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config.run_config import RunConfig
from src.core.exceptions import ConfigurationError, UsageError
from src.env.policies import RandomPolicy, ScriptedExpert
from src.env.tabletop import TabletopEnv
from src.env.tasks import TaskRegistry
from src.env.types import Action, Observation, Split, TaskContext, TaskSpec, Transition
from src.logging_config.logger import setup_logger
from src.netcore.network import PIQTNetwork
from src.netcore.params import ParameterSet
from src.pipeline.metrics import EpisodeRecord
from src.qtopt.policy import CemPolicy
from src.utils.seeding import derive_rng

logger = setup_logger(__name__)

Policy = Callable[[Observation, TaskContext], np.ndarray]
POLICY_KINDS = ("greedy", "expert", "random")
REPORT_COLUMNS = ["split", "policy", "seed", "episodes", "successes", "success_rate"]
TASK_COLUMNS = ["task_id", "episodes", "successes", "success_rate"]


@dataclass
class EvalReport:
    """Success over a split: mean and standard deviation across evaluation seeds"""

    split: str
    policy: str
    seeds: List[int]
    per_seed: Dict[int, Tuple[int, int]]  # seed -> (successes, episodes)
    per_task: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=TASK_COLUMNS))

    @property
    def count(self) -> int:
        return sum(n for _, n in self.per_seed.values())

    @property
    def rates(self) -> List[float]:
        return [s / n if n else 0.0 for s, n in self.per_seed.values()]

    @property
    def success_rate(self) -> float:
        return float(np.mean(self.rates)) if self.rates else 0.0

    @property
    def std(self) -> float:
        return float(np.std(self.rates)) if self.rates else 0.0

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"split": self.split, "policy": self.policy, "seed": seed,
             "episodes": n, "successes": s, "success_rate": s / n if n else 0.0}
            for seed, (s, n) in self.per_seed.items()
        ]
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)

    def summary(self) -> str:
        return (
            f"{self.split}: success {self.success_rate:.3f} ± {self.std:.3f} "
            f"over {len(self.seeds)} seed(s), {self.count} episodes ({self.policy})"
        )


def stratified_tasks(tasks: Sequence[TaskSpec], episodes: int) -> List[TaskSpec]:
    """Round-robin over the split; every task appears once when episodes >= len(tasks)"""
    return [tasks[i % len(tasks)] for i in range(episodes)]


def make_policy(
    kind: str,
    env: TabletopEnv,
    network: Optional[PIQTNetwork],
    params: Optional[ParameterSet],
    config: RunConfig,
    rng: np.random.Generator,
) -> Policy:
    if kind == "expert":
        return ScriptedExpert(env)
    if kind == "random":
        return RandomPolicy(rng, config.cem.action_low, config.cem.action_high)
    if kind == "greedy":
        if network is None or params is None:
            raise UsageError("greedy evaluation needs a network and parameters")
        return CemPolicy(network, params, config.cem, rng, eps=0.0)
    raise ConfigurationError(f"unknown policy {kind} (expected one of {', '.join(POLICY_KINDS)})")


def run_episode(env: TabletopEnv, policy: Policy, task: TaskSpec, seed: int) -> List[Transition]:
    obs, context = env.reset(task, seed=seed)
    transitions: List[Transition] = []
    done = False
    while not done:
        action = Action(policy(obs, context)).vector
        next_obs, reward, done = env.step(action)
        transitions.append(Transition(obs, action, reward, next_obs, done, context, task.task_id))
        obs = next_obs
    return transitions


def evaluate(
    config: RunConfig,
    registry: TaskRegistry,
    split: Split | str,
    episodes: int,
    seeds: Sequence[int],
    network: Optional[PIQTNetwork] = None,
    params: Optional[ParameterSet] = None,
    policy_kind: str = "greedy",
) -> Tuple[EvalReport, List[EpisodeRecord]]:
    """
    Roll out `episodes` stratified episodes per seed; parameters are only read

    Raises:
        UsageError for an empty split or repeated seeds
    """
    split = Split(split)
    tasks = registry.split(split)
    if not tasks:
        raise UsageError(f"split {split.value} has no tasks in this registry")
    if episodes < 1 or not seeds:
        raise UsageError("evaluation needs at least one episode and one seed")
    repeated = sorted({s for s in seeds if list(seeds).count(s) > 1})
    if repeated:
        raise UsageError(f"evaluation seeds must be distinct, repeated: {repeated}")

    env = TabletopEnv(config.env, registry)
    per_seed: Dict[int, Tuple[int, int]] = {}
    records: List[EpisodeRecord] = []
    for seed in seeds:
        rng = derive_rng(seed, "eval", split.value)
        policy = make_policy(policy_kind, env, network, params, config, rng)
        successes = 0
        for i, task in enumerate(stratified_tasks(tasks, episodes)):
            scene_seed = int(derive_rng(seed, "eval-scene", split.value, i).integers(2 ** 31 - 1))
            transitions = run_episode(env, policy, task, scene_seed)
            success = int(transitions[-1].reward == 1.0)
            successes += success
            records.append(EpisodeRecord(
                task_id=task.task_id, split=split.value, success=success, steps=len(transitions),
                mean_td_error=None, mean_infonce=None, seed=seed,
            ))
        per_seed[seed] = (successes, episodes)
        logger.info(f"seed {seed}: {successes}/{episodes} successes on {split.value}")

    frame = pd.DataFrame([r.to_row() for r in records])
    per_task = (
        frame.groupby("task_id")["success"].agg(episodes="count", successes="sum").reset_index()
    )
    per_task["success_rate"] = per_task["successes"] / per_task["episodes"]
    report = EvalReport(split.value, policy_kind, list(seeds), per_seed, per_task[TASK_COLUMNS])
    return report, records
