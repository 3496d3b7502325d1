"""Per-episode TD error and predictive-information estimates from a trained checkpoint"""

from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from src.core.exceptions import UsageError
from src.env.tabletop import TabletopEnv
from src.env.types import TaskSpec
from src.evalcli.evaluation import run_episode
from src.evalcli.session import Session
from src.logging_config.logger import setup_logger
from src.netcore.batch import StateBatch
from src.pi_aux.estimator import episode_infonce
from src.pipeline.metrics import EPISODE_COLUMNS, EpisodeRecord
from src.qtopt.bellman import bellman_targets
from src.qtopt.losses import td_errors
from src.qtopt.policy import CemPolicy
from src.utils.records import sanitize_records
from src.utils.seeding import derive_rng

logger = setup_logger(__name__)


def mi_td_records(
    session: Session,
    episodes_per_task: int,
    seed: int = 0,
    tasks: Optional[Sequence[TaskSpec]] = None,
) -> List[EpisodeRecord]:
    """
    Greedy episodes on every task; per episode the mean |Q_θ - Q_T| and the
    InfoNCE estimate over an analysis batch of eval.mi_td_batch transitions

    Raises:
        UsageError for checkpoints trained without the auxiliary
    """
    config, network = session.config, session.network
    if not config.aux.enabled or not network.has_pi_heads:
        raise UsageError("mi-td needs a checkpoint trained with the auxiliary enabled (no PI heads found)")
    theta, lagged = session.state.theta, session.state.lagged
    env = TabletopEnv(config.env, session.registry)
    tasks = list(tasks) if tasks is not None else list(session.registry)

    records: List[EpisodeRecord] = []
    for task_i, task in enumerate(tasks):
        for ep in range(episodes_per_task):
            rng = derive_rng(seed, "mi-td", task_i, ep)
            scene_seed = int(rng.integers(2 ** 31 - 1))
            policy = CemPolicy(network, theta, config.cem, rng, eps=0.0)
            transitions = run_episode(env, policy, task, scene_seed)

            targets, next_actions, _ = bellman_targets(
                transitions, network, lagged, config.training.gamma, config.cem, rng
            )
            states = StateBatch.from_items([t.obs for t in transitions], [t.context for t in transitions])
            q = network.q_values(theta, states, np.stack([t.action for t in transitions]))
            infonce = episode_infonce(
                transitions, next_actions, network, theta, lagged,
                config.aux.kappa_b, config.eval.mi_td_batch, rng,
            )
            records.append(EpisodeRecord(
                task_id=task.task_id,
                split=task.split.value,
                success=int(transitions[-1].reward == 1.0),
                steps=len(transitions),
                mean_td_error=float(td_errors(q, targets).mean()),
                mean_infonce=infonce,
                seed=scene_seed,
            ))
        logger.debug(f"{task.task_id}: {episodes_per_task} episodes analysed")
    return records


def write_mi_td(records: List[EpisodeRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(sanitize_records([r.to_row() for r in records]), columns=EPISODE_COLUMNS)
    frame.to_csv(path, index=False)
    return path


def summarize_mi_td(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean MI and TD error split by episode outcome"""
    return frame.groupby("success")[["mean_infonce", "mean_td_error"]].mean().reset_index()
