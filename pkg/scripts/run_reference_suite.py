"""
Reference run: train a preset, evaluate it, analyse MI vs TD error,
then check the results against the acceptance thresholds.

Steps:
1. train        - sync pipeline on the preset, checkpoints under <out>/train
2. eval         - greedy success on train (and held-out, if the preset has one),
                  plus the scripted expert as an upper reference
3. mi-td        - per-episode InfoNCE and TD error from the final checkpoint
4. ablation     - no-aux vs beta=0 vs beta=0.01 (only with --ablation)
5. checks       - greedy Pick success >= 0.8, MI estimates <= log K,
                  MI of successful > failed episodes, PI >= no-aux

Usage:
    python scripts/run_reference_suite.py

Flags:
    --preset smoke     Preset to run (smoke, pick, suite)
    --out runs/ref     Output directory
    --seeds 0,1        Evaluation and ablation seeds
    --ablation         Also run the compression ablation
    --report-only      Log the checks without failing on them

Exit codes: 0 ok, 1 run failed, 4 a threshold check failed
"""

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
from dotenv import load_dotenv

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config.run_config import preset_config
from src.core.exceptions import PIQTException
from src.env.types import Split
from src.evalcli.ablation import ablation_summary, run_ablation
from src.evalcli.acceptance import CheckResult, check_ablation, check_mi_by_outcome, check_pick_success
from src.evalcli.evaluation import EvalReport, evaluate
from src.evalcli.mi_td import mi_td_records, summarize_mi_td, write_mi_td
from src.evalcli.session import open_checkpoint
from src.logging_config.logger import configure_logging, setup_logger
from src.pipeline.runner import FINAL_CHECKPOINT, TrainingPipeline

load_dotenv()

configure_logging()
logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CHECKS = 4


def evaluate_split(session, split: Split, seeds, out: Path) -> Optional[EvalReport]:
    """Greedy and expert reports for one split; returns the greedy one"""
    if not session.registry.split(split):
        logger.info(f"⏭️ {split.value}: no tasks, skipped")
        return None
    episodes = session.config.eval.episodes
    greedy = None
    for policy in ("greedy", "expert"):
        report, _ = evaluate(
            session.config, session.registry, split, episodes, seeds,
            network=session.network, params=session.state.theta, policy_kind=policy,
        )
        report.to_frame().to_csv(out / f"eval_{split.value}_{policy}.csv", index=False)
        logger.info(f"📊 {report.summary()}")
        if policy == "greedy":
            greedy = report
    return greedy


def log_checks(checks: List[CheckResult]) -> bool:
    """Log every check; True when none failed"""
    for check in checks:
        mark = "⏭️" if check.passed is None else ("✅" if check.passed else "❌")
        logger.info(f"{mark} {check.name}: {check.detail}")
    return not any(check.failed for check in checks)


def main() -> int:
    parser = argparse.ArgumentParser(description="Reference train/eval/mi-td run")
    parser.add_argument("--preset", default="smoke", choices=["smoke", "pick", "suite"])
    parser.add_argument("--out", default="runs/reference")
    parser.add_argument("--seeds", default="0,1")
    parser.add_argument("--ablation", action="store_true")
    parser.add_argument("--report-only", action="store_true")
    args = parser.parse_args()

    out = Path(args.out)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    config = preset_config(args.preset)

    logger.info("=" * 60)
    logger.info(f"🚀 Reference run: preset={args.preset}, out={out}")
    logger.info("=" * 60)

    checks: List[CheckResult] = []
    try:
        summary = TrainingPipeline(config, out / "train").run()
        logger.info(f"✅ Trained {summary.steps} steps, {summary.episodes} episodes")

        session = open_checkpoint(out / "train" / FINAL_CHECKPOINT)
        train_report = evaluate_split(session, Split.TRAIN, seeds, out)
        evaluate_split(session, Split.HELDOUT, seeds, out)
        if train_report is not None:
            checks.append(check_pick_success(train_report))

        if config.aux.enabled:
            records = mi_td_records(session, config.eval.mi_td_episodes_per_task, seed=seeds[0])
            path = write_mi_td(records, out / "mi_td.csv")
            mi_frame = pd.read_csv(path)
            logger.info(f"📊 MI vs TD error by outcome:\n{summarize_mi_td(mi_frame).to_string(index=False)}")
            checks.extend(check_mi_by_outcome(mi_frame, config.eval.mi_td_batch))

        if args.ablation:
            frame = run_ablation(config, seeds, out / "ablation")
            frame.to_csv(out / "ablation.csv", index=False)
            logger.info(f"📊 Ablation:\n{ablation_summary(frame).to_string()}")
            checks.extend(check_ablation(frame))
    except PIQTException as e:
        logger.error(f"❌ Reference run failed: {e}")
        return EXIT_FAILURE

    logger.info("=" * 60)
    passed = log_checks(checks)
    if not passed and not args.report_only:
        logger.error("❌ Reference run below threshold")
        return EXIT_CHECKS

    logger.info("✅ Reference run complete")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
