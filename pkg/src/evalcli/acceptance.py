"""Threshold checks for the reference run: Pick learning, MI by outcome, PI vs no-aux"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd

from src.env.types import Skill
from src.evalcli.ablation import ablation_summary
from src.evalcli.evaluation import EvalReport
from src.evalcli.mi_td import summarize_mi_td

PICK_SUCCESS_THRESHOLD = 0.8


@dataclass
class CheckResult:
    name: str
    passed: Optional[bool]  # None: not evaluable on this run
    detail: str

    @property
    def failed(self) -> bool:
        return self.passed is False


def check_pick_success(report: EvalReport, threshold: float = PICK_SUCCESS_THRESHOLD) -> CheckResult:
    """Greedy success over the Pick tasks of a report"""
    per_task = report.per_task
    pick = per_task[per_task["task_id"].str.startswith(f"{Skill.PICK.value}:")]
    if pick.empty:
        return CheckResult("pick_success", None, f"no Pick tasks in the {report.split} report")
    rate = float(pick["successes"].sum() / pick["episodes"].sum())
    return CheckResult("pick_success", rate >= threshold, f"{rate:.3f} (need >= {threshold})")


def check_mi_by_outcome(frame: pd.DataFrame, batch_size: int) -> List[CheckResult]:
    """
    Every estimate stays under log K, and successful episodes carry more MI than failed ones

    Args:
        frame: mi-td episode rows (success, mean_infonce, mean_td_error)
        batch_size: K of the analysis batch
    """
    values = frame["mean_infonce"].dropna()
    if values.empty:
        return [CheckResult("mi_bound", None, "no MI estimates (auxiliary off)")]
    bound = float(np.log(batch_size))
    results = [CheckResult("mi_bound", bool(values.max() <= bound + 1e-6),
                           f"max {values.max():.4f} (bound log {batch_size} = {bound:.4f})")]

    by_outcome = summarize_mi_td(frame).set_index("success")["mean_infonce"]
    if not {0, 1} <= set(by_outcome.index):
        results.append(CheckResult("mi_by_outcome", None, "needs both successful and failed episodes"))
        return results
    won, lost = float(by_outcome.loc[1]), float(by_outcome.loc[0])
    results.append(CheckResult("mi_by_outcome", won > lost, f"success {won:.4f} vs failure {lost:.4f}"))
    return results


def check_ablation(frame: pd.DataFrame) -> List[CheckResult]:
    """PI (beta=0.01) mean final success >= no-aux, on train and, when present, held-out"""
    summary = ablation_summary(frame)
    if not {"beta=0.01", "no-aux"} <= set(summary.index):
        return [CheckResult("pi_vs_no_aux", None, "ablation lacks the beta=0.01 or no-aux variant")]
    results = []
    for column in ("train_success", "heldout_success"):
        pi = summary.loc["beta=0.01", (column, "mean")]
        base = summary.loc["no-aux", (column, "mean")]
        if pd.isna(pi) or pd.isna(base):
            continue
        results.append(CheckResult(f"pi_vs_no_aux_{column}", bool(pi >= base), f"{pi:.3f} vs {base:.3f}"))
    return results or [CheckResult("pi_vs_no_aux", None, "no finished ablation rows")]
