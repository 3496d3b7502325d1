"""Evaluation, MI/TD analysis, ablation harness and the command-line surface"""

from src.evalcli.ablation import VARIANTS, ablation_summary, run_ablation, variant_config
from src.evalcli.acceptance import CheckResult, check_ablation, check_mi_by_outcome, check_pick_success
from src.evalcli.evaluation import EvalReport, evaluate, run_episode
from src.evalcli.mi_td import mi_td_records, summarize_mi_td, write_mi_td
from src.evalcli.session import Session, open_checkpoint
from src.pipeline.metrics import EpisodeRecord

__all__ = [
    "CheckResult",
    "EpisodeRecord",
    "EvalReport",
    "Session",
    "VARIANTS",
    "ablation_summary",
    "check_ablation",
    "check_mi_by_outcome",
    "check_pick_success",
    "evaluate",
    "mi_td_records",
    "open_checkpoint",
    "run_ablation",
    "run_episode",
    "summarize_mi_td",
    "variant_config",
    "write_mi_td",
]
