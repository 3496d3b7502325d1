"""Command-line entry point: train, eval, mi-td, ablation, gen-config"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from src.config.run_config import load_run_config, preset_config, save_run_config
from src.config.settings import get_settings
from src.core.exceptions import ConfigurationError, PIQTException, RegistryError, TrainingError, UsageError
from src.evalcli.ablation import VARIANTS, ablation_summary, run_ablation
from src.evalcli.evaluation import POLICY_KINDS, evaluate
from src.evalcli.mi_td import mi_td_records, summarize_mi_td, write_mi_td
from src.evalcli.session import open_checkpoint
from src.logging_config.logger import configure_logging, setup_logger
from src.pipeline.metrics import EPISODE_COLUMNS
from src.pipeline.runner import TrainingPipeline
from src.utils.records import sanitize_records

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_TRAINING = 3


def _seeds(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--seeds must be comma-separated integers, got {text!r}") from None


def _out_dir(args, default_name: str) -> Path:
    return Path(args.out) if args.out else Path(get_settings().DEFAULT_OUT_DIR) / default_name


def cmd_train(args) -> int:
    config = load_run_config(args.config)
    out = _out_dir(args, config.name)
    pipeline = TrainingPipeline(config, out)
    if args.resume:
        pipeline.resume(args.resume)
    summary = pipeline.run()
    logger.info(f"✅ Checkpoint: {summary.final_checkpoint}")
    logger.info(f"✅ Metrics: {out / 'metrics.csv'}")
    if not summary.conserved:
        logger.warning("replay accounting does not balance")
    return EXIT_OK


def cmd_eval(args) -> int:
    session = open_checkpoint(args.checkpoint)
    seeds = _seeds(args.seeds) or session.config.eval.seeds
    episodes = args.episodes or session.config.eval.episodes
    report, records = evaluate(
        session.config, session.registry, args.split, episodes, seeds,
        network=session.network, params=session.state.theta, policy_kind=args.policy,
    )
    out = _out_dir(args, "eval")
    out.mkdir(parents=True, exist_ok=True)
    report.to_frame().to_csv(out / f"eval_{args.split}_{args.policy}.csv", index=False)
    report.per_task.to_csv(out / f"eval_{args.split}_{args.policy}_tasks.csv", index=False)
    episodes_frame = pd.DataFrame(sanitize_records([r.to_row() for r in records]), columns=EPISODE_COLUMNS)
    episodes_frame.to_csv(out / f"eval_{args.split}_{args.policy}_episodes.csv", index=False)
    logger.info(f"✅ {report.summary()}")
    print(report.summary())
    return EXIT_OK


def cmd_mi_td(args) -> int:
    session = open_checkpoint(args.checkpoint)
    episodes = args.episodes or session.config.eval.mi_td_episodes_per_task
    seed = (_seeds(args.seeds) or [0])[0]
    records = mi_td_records(session, episodes, seed=seed)
    path = write_mi_td(records, _out_dir(args, "mi_td") / "mi_td.csv")
    logger.info(f"✅ {len(records)} episode rows written to {path}")
    print(summarize_mi_td(pd.read_csv(path)).to_string(index=False))
    return EXIT_OK


def cmd_ablation(args) -> int:
    base = load_run_config(args.config)
    seeds = _seeds(args.seeds) or base.eval.seeds
    out = _out_dir(args, f"{base.name}_ablation")
    frame = run_ablation(base, seeds, out, variants=VARIANTS)
    path = out / "ablation.csv"
    frame.to_csv(path, index=False)
    logger.info(f"✅ Ablation table: {path}")
    print(ablation_summary(frame).to_string())
    if (frame["status"] == "interrupted").any():
        logger.error("some ablation runs were interrupted; results are partial")
        return EXIT_TRAINING
    return EXIT_OK


def cmd_gen_config(args) -> int:
    config = preset_config(args.preset)
    path = Path(args.out) if args.out else Path(f"{args.preset}.json")
    if path.suffix != ".json":
        path = path / f"{args.preset}.json"
    save_run_config(config, path)
    logger.info(f"✅ {args.preset} config written to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="piqt", description="Multi-task QT-Opt with a predictive-information auxiliary")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="Run the training pipeline")
    train.add_argument("--config", required=True, help="RunConfig JSON file")
    train.add_argument("--out", help="Run directory")
    train.add_argument("--resume", help="Checkpoint of an earlier sync run to continue from")
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="Success rate on a task split")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--split", choices=["train", "heldout"], default="train")
    ev.add_argument("--episodes", type=int, help="Episodes per seed")
    ev.add_argument("--seeds", help="Comma-separated evaluation seeds")
    ev.add_argument("--policy", choices=POLICY_KINDS, default="greedy")
    ev.add_argument("--out", help="Output directory")
    ev.set_defaults(func=cmd_eval)

    mi = sub.add_parser("mi-td", help="Per-episode TD error and InfoNCE estimate")
    mi.add_argument("--checkpoint", required=True)
    mi.add_argument("--episodes", type=int, help="Episodes per task")
    mi.add_argument("--seeds", help="First value seeds the episode streams")
    mi.add_argument("--out", help="Output directory")
    mi.set_defaults(func=cmd_mi_td)

    ab = sub.add_parser("ablation", help="no-aux vs beta=0 vs beta=0.01")
    ab.add_argument("--config", required=True)
    ab.add_argument("--seeds", help="Comma-separated training seeds (at least 2)")
    ab.add_argument("--out", help="Output directory")
    ab.set_defaults(func=cmd_ablation)

    gen = sub.add_parser("gen-config", help="Write a preset RunConfig")
    gen.add_argument("--preset", choices=["smoke", "pick", "suite"], default="smoke")
    gen.add_argument("--out", help="Target .json file or directory")
    gen.set_defaults(func=cmd_gen_config)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    configure_logging(
        log_level=settings.LOG_LEVEL,
        log_dir=settings.LOG_DIR,
        log_to_file=settings.LOG_TO_FILE,
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, UsageError, RegistryError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingError as e:
        logger.error(f"Training aborted: {e}")
        print(f"training aborted: {e}", file=sys.stderr)
        return EXIT_TRAINING
    except PIQTException as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
