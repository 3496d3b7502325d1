"""Compression ablation: no auxiliary vs β = 0 vs β = 0.01 under identical seeds"""

from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import pandas as pd

from src.config.run_config import RunConfig
from src.core.exceptions import PIQTException, UsageError
from src.env.types import Split
from src.evalcli.evaluation import evaluate
from src.evalcli.session import open_checkpoint
from src.logging_config.logger import setup_logger
from src.pipeline.runner import CHECKPOINT_DIR, FINAL_CHECKPOINT, TrainingPipeline

logger = setup_logger(__name__)

VARIANTS = ("no-aux", "beta=0", "beta=0.01")
ABLATION_COLUMNS = ["variant", "seed", "learner_step", "train_success", "heldout_success", "status"]


def variant_config(base: RunConfig, variant: str, seed: int) -> RunConfig:
    """Copy of base that differs only in the variant's auxiliary fields and the seed"""
    if variant == "no-aux":
        aux = base.aux.model_copy(update={"enabled": False})
    elif variant == "beta=0":
        aux = base.aux.model_copy(update={"enabled": True, "beta": 0.0})
    elif variant == "beta=0.01":
        aux = base.aux.model_copy(update={"enabled": True, "beta": 0.01})
    else:
        raise UsageError(f"unknown ablation variant {variant} (expected one of {', '.join(VARIANTS)})")
    training = base.training.model_copy(update={"seed": seed})
    return base.model_copy(update={"aux": aux, "training": training})


def _success(session, split: Split, episodes: int, seed: int) -> Optional[float]:
    if not session.registry.split(split):
        return None
    report, _ = evaluate(
        session.config, session.registry, split, episodes, [seed],
        network=session.network, params=session.state.theta,
    )
    return report.success_rate


def _curve(run_dir: Path, variant: str, seed: int, episodes: int) -> List[Dict[str, object]]:
    rows = []
    for ckpt in sorted((run_dir / CHECKPOINT_DIR).glob("step_*.ckpt")):
        session = open_checkpoint(ckpt)
        rows.append({
            "variant": variant,
            "seed": seed,
            "learner_step": session.state.step,
            "train_success": _success(session, Split.TRAIN, episodes, seed),
            "heldout_success": _success(session, Split.HELDOUT, episodes, seed),
            "status": "ok",
        })
    return rows


def run_ablation(
    base: RunConfig,
    seeds: Sequence[int],
    out_dir: str | Path,
    variants: Sequence[str] = VARIANTS,
    pipeline_factory: Callable[[RunConfig, Path], TrainingPipeline] = TrainingPipeline,
) -> pd.DataFrame:
    """
    Train every (variant, seed), evaluate each checkpoint for the learning curve
    and the final parameters for the end-of-budget rates.

    A variant that fails mid-run keeps its partial curve and gets one row with
    status "interrupted".

    Returns:
        DataFrame with ABLATION_COLUMNS; one row per (variant, seed) at every
        checkpoint step, plus one "final" row per (variant, seed)
    """
    if len(seeds) < 2:
        raise UsageError("the ablation needs at least 2 seeds per variant")
    out_dir = Path(out_dir)
    rows: List[Dict[str, object]] = []
    for variant in variants:
        for seed in seeds:
            config = variant_config(base, variant, seed)
            run_dir = out_dir / variant / f"seed_{seed}"
            logger.info(f"Ablation run {variant} seed {seed} -> {run_dir}")
            try:
                pipeline_factory(config, run_dir).run()
            except PIQTException as e:
                logger.error(f"{variant} seed {seed} interrupted: {e}")
                rows.extend(_curve(run_dir, variant, seed, base.eval.curve_episodes))
                rows.append({
                    "variant": variant, "seed": seed, "learner_step": None,
                    "train_success": None, "heldout_success": None, "status": "interrupted",
                })
                continue
            rows.extend(_curve(run_dir, variant, seed, base.eval.curve_episodes))
            final = open_checkpoint(run_dir / FINAL_CHECKPOINT)
            rows.append({
                "variant": variant,
                "seed": seed,
                "learner_step": final.state.step,
                "train_success": _success(final, Split.TRAIN, base.eval.episodes, seed),
                "heldout_success": _success(final, Split.HELDOUT, base.eval.episodes, seed),
                "status": "final",
            })
    return pd.DataFrame(rows, columns=ABLATION_COLUMNS)


def ablation_summary(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean ± std of the final rates per variant"""
    final = frame[frame["status"] == "final"]
    return final.groupby("variant")[["train_success", "heldout_success"]].agg(["mean", "std"])
