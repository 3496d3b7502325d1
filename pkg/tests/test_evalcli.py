"""Tests for evaluation, mi-td analysis, the ablation driver and the CLI"""

import numpy as np
import pandas as pd
import pytest

from src.core.exceptions import RestoreError, TrainingError, UsageError
from src.env.tasks import task_registry
from src.evalcli.ablation import ABLATION_COLUMNS, ablation_summary, run_ablation, variant_config
from src.evalcli.acceptance import check_ablation, check_mi_by_outcome, check_pick_success
from src.evalcli.evaluation import TASK_COLUMNS, EvalReport, evaluate, stratified_tasks
from src.evalcli.main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, EXIT_TRAINING, main
from src.evalcli.mi_td import mi_td_records, summarize_mi_td, write_mi_td
from src.evalcli.session import open_checkpoint
from src.pipeline.runner import FINAL_CHECKPOINT, TrainingPipeline
from tests.conftest import make_config, with_section


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    TrainingPipeline(make_config(), out).run()
    return out


class TestEvaluate:
    """Tests for split success rates"""

    def test_expert_report(self, tiny_config):
        """Expert evaluation reports every episode per seed and per task"""
        config = with_section(tiny_config, "env", grid_size=8, step_limit=20)
        report, records = evaluate(config, task_registry(config.env), "train", 3, [0, 1], policy_kind="expert")
        assert report.count == 6
        assert len(records) == 6
        assert set(report.to_frame()["seed"]) == {0, 1}
        assert 0.0 <= report.success_rate <= 1.0
        assert report.per_task["episodes"].sum() == 6

    def test_greedy_from_checkpoint_is_reproducible(self, trained_run):
        """Greedy evaluation of a checkpoint repeats exactly"""
        session = open_checkpoint(trained_run / FINAL_CHECKPOINT)
        args = (session.config, session.registry, "train", 2, [3])
        first, _ = evaluate(*args, network=session.network, params=session.state.theta)
        second, _ = evaluate(*args, network=session.network, params=session.state.theta)
        assert first.per_seed == second.per_seed

    def test_empty_heldout(self, tiny_config, registry):
        """Evaluating an empty split is a usage error"""
        with pytest.raises(UsageError, match="no tasks"):
            evaluate(tiny_config, registry, "heldout", 2, [0], policy_kind="random")

    def test_repeated_seeds_rejected(self, tiny_config, registry):
        """A seed listed twice would overwrite its own per-seed result"""
        with pytest.raises(UsageError, match="distinct"):
            evaluate(tiny_config, registry, "train", 2, [0, 1, 0], policy_kind="random")

    def test_greedy_needs_parameters(self, tiny_config, registry):
        """Greedy evaluation needs a network and parameters"""
        with pytest.raises(UsageError):
            evaluate(tiny_config, registry, "train", 1, [0])

    def test_stratified_tasks_cover_split(self, registry):
        """Stratified sampling visits every task of the split"""
        tasks = stratified_tasks(registry.train, 7)
        assert {t.task_id for t in tasks} == {t.task_id for t in registry.train}


class TestMiTd:
    """Tests for the per-episode analysis"""

    def test_records_are_bounded(self, trained_run, tmp_path):
        """Per-episode records stay under log K and summarize by outcome"""
        session = open_checkpoint(trained_run / FINAL_CHECKPOINT)
        records = mi_td_records(session, episodes_per_task=1)
        assert len(records) == len(session.registry)
        for record in records:
            assert record.mean_td_error >= 0.0
            assert record.mean_infonce <= np.log(session.config.eval.mi_td_batch) + 1e-6
        frame = pd.read_csv(write_mi_td(records, tmp_path / "mi_td.csv"))
        assert set(summarize_mi_td(frame).columns) == {"success", "mean_infonce", "mean_td_error"}

    def test_aux_off_checkpoint(self, tmp_path):
        """Checkpoints without the auxiliary cannot be analyzed"""
        config = with_section(make_config(), "aux", enabled=False)
        TrainingPipeline(config, tmp_path).run()
        with pytest.raises(UsageError, match="auxiliary"):
            mi_td_records(open_checkpoint(tmp_path / FINAL_CHECKPOINT), 1)

    def test_missing_checkpoint(self, tmp_path):
        """Opening a missing checkpoint raises RestoreError"""
        with pytest.raises(RestoreError):
            open_checkpoint(tmp_path / "absent.ckpt")


class TestAblation:
    """Tests for variant configs and the ablation table"""

    def test_variants_differ_only_in_aux(self, tiny_config):
        """β variants differ only in β"""
        zero = variant_config(tiny_config, "beta=0", 1).model_dump()
        compressed = variant_config(tiny_config, "beta=0.01", 1).model_dump()
        assert zero["aux"]["beta"] == 0.0 and compressed["aux"]["beta"] == 0.01
        zero["aux"].pop("beta")
        compressed["aux"].pop("beta")
        assert zero == compressed

    def test_no_aux_variant(self, tiny_config):
        """The no-aux variant disables the auxiliary and keeps the network"""
        config = variant_config(tiny_config, "no-aux", 4)
        assert config.aux.enabled is False
        assert config.training.seed == 4
        assert config.network == tiny_config.network

    def test_unknown_variant(self, tiny_config):
        """Unknown variant names are refused"""
        with pytest.raises(UsageError):
            variant_config(tiny_config, "beta=1", 0)

    def test_needs_two_seeds(self, tiny_config, tmp_path):
        """The ablation needs at least two seeds"""
        with pytest.raises(UsageError, match="2 seeds"):
            run_ablation(tiny_config, [0], tmp_path)

    def test_failed_run_is_marked_interrupted(self, tiny_config, tmp_path):
        """A failing run leaves interrupted rows"""
        class Failing:
            def __init__(self, config, out_dir):
                pass

            def run(self):
                raise TrainingError("non-finite loss")

        frame = run_ablation(tiny_config, [0, 1], tmp_path, variants=["no-aux"], pipeline_factory=Failing)
        assert list(frame.columns) == ABLATION_COLUMNS
        assert list(frame["status"]) == ["interrupted", "interrupted"]

    def test_table_rows(self, tiny_config, tmp_path):
        """Each variant and seed gives curve rows and one final row"""
        frame = run_ablation(tiny_config, [0, 1], tmp_path, variants=["no-aux", "beta=0.01"])
        final = frame[frame["status"] == "final"]
        assert len(final) == 4
        assert (final["learner_step"] == tiny_config.training.total_steps).all()
        assert final["heldout_success"].isna().all()
        assert len(frame[frame["status"] == "ok"]) == 4 * 3
        assert set(ablation_summary(frame).index) == {"no-aux", "beta=0.01"}


def _ablation_rows(pi_rate, base_rate):
    rows = []
    for variant, rate in (("beta=0.01", pi_rate), ("no-aux", base_rate)):
        for seed in (0, 1):
            rows.append({"variant": variant, "seed": seed, "learner_step": 6, "train_success": rate,
                         "heldout_success": np.nan, "status": "final"})
    return pd.DataFrame(rows, columns=ABLATION_COLUMNS)


class TestAcceptanceChecks:
    """Tests for the reference-run thresholds"""

    def _report(self, rows):
        per_task = pd.DataFrame(rows, columns=TASK_COLUMNS)
        return EvalReport("train", "greedy", [0], {0: (int(per_task["successes"].sum()),
                                                       int(per_task["episodes"].sum()))}, per_task)

    def test_pick_success_counts_only_pick_tasks(self):
        """Pick rate pools Pick tasks and ignores other skills"""
        report = self._report([
            ("pick:apple", 10, 9, 0.9),
            ("pick:sponge", 10, 8, 0.8),
            ("knock:coke_can", 10, 0, 0.0),
        ])
        check = check_pick_success(report)
        assert check.passed is True
        assert "0.850" in check.detail

    def test_pick_success_below_threshold(self):
        """A Pick rate under 0.8 fails"""
        check = check_pick_success(self._report([("pick:apple", 10, 7, 0.7)]))
        assert check.failed

    def test_pick_success_without_pick_tasks(self):
        """Reports without Pick tasks are not evaluable"""
        check = check_pick_success(self._report([("knock:coke_can", 4, 4, 1.0)]))
        assert check.passed is None and not check.failed

    def test_mi_by_outcome(self):
        """Successful episodes must carry more MI than failed ones"""
        frame = pd.DataFrame({"success": [1, 1, 0, 0], "mean_infonce": [2.0, 1.8, 1.0, 1.2],
                              "mean_td_error": [0.1, 0.1, 0.3, 0.2]})
        checks = {c.name: c for c in check_mi_by_outcome(frame, batch_size=128)}
        assert checks["mi_bound"].passed is True
        assert checks["mi_by_outcome"].passed is True
        frame["mean_infonce"] = [1.0, 1.0, 2.0, 2.0]
        checks = {c.name: c for c in check_mi_by_outcome(frame, batch_size=128)}
        assert checks["mi_by_outcome"].failed

    def test_mi_above_log_k_fails(self):
        """An estimate above log K breaks the bound check"""
        frame = pd.DataFrame({"success": [1, 0], "mean_infonce": [np.log(4) + 0.1, 0.0],
                              "mean_td_error": [0.1, 0.2]})
        checks = {c.name: c for c in check_mi_by_outcome(frame, batch_size=4)}
        assert checks["mi_bound"].failed

    def test_mi_single_outcome_not_evaluable(self):
        """All-successful runs cannot compare outcomes"""
        frame = pd.DataFrame({"success": [1, 1], "mean_infonce": [1.0, 1.5], "mean_td_error": [0.1, 0.1]})
        checks = {c.name: c for c in check_mi_by_outcome(frame, batch_size=128)}
        assert checks["mi_by_outcome"].passed is None

    def test_ablation_pi_vs_no_aux(self):
        """PI must match or beat the no-aux baseline on the final train rate"""
        assert all(c.passed for c in check_ablation(_ablation_rows(0.6, 0.5)))
        assert all(c.passed for c in check_ablation(_ablation_rows(0.5, 0.5)))
        failed = check_ablation(_ablation_rows(0.4, 0.5))
        assert [c.name for c in failed] == ["pi_vs_no_aux_train_success"]
        assert failed[0].failed


class TestCli:
    """Tests for subcommand dispatch and exit codes"""

    def test_gen_config(self, tmp_path):
        """gen-config writes the named preset"""
        assert main(["gen-config", "--preset", "smoke", "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "smoke.json").exists()

    def test_missing_config(self, tmp_path):
        """A missing config file exits with the config code"""
        assert main(["train", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG

    def test_bogus_checkpoint(self, tmp_path):
        """A corrupt checkpoint exits with the failure code"""
        bogus = tmp_path / "bogus.ckpt"
        bogus.write_bytes(b"not a checkpoint")
        assert main(["eval", "--checkpoint", str(bogus)]) == EXIT_FAILURE

    def test_bad_seeds(self, trained_run, tmp_path):
        """Non-integer seeds exit with the config code"""
        argv = ["eval", "--checkpoint", str(trained_run / FINAL_CHECKPOINT), "--seeds", "a,b", "--out", str(tmp_path)]
        assert main(argv) == EXIT_CONFIG

    def test_ablation_with_one_seed(self, tmp_path):
        """An ablation with one seed exits with the config code"""
        assert main(["gen-config", "--preset", "smoke", "--out", str(tmp_path / "c.json")]) == EXIT_OK
        argv = ["ablation", "--config", str(tmp_path / "c.json"), "--seeds", "0", "--out", str(tmp_path)]
        assert main(argv) == EXIT_CONFIG

    def test_eval_writes_tables(self, trained_run, tmp_path):
        """eval writes the split report and the episode table"""
        argv = [
            "eval", "--checkpoint", str(trained_run / FINAL_CHECKPOINT),
            "--episodes", "2", "--seeds", "0", "--out", str(tmp_path),
        ]
        assert main(argv) == EXIT_OK
        report = pd.read_csv(tmp_path / "eval_train_greedy.csv")
        assert list(report["episodes"]) == [2]
        assert len(pd.read_csv(tmp_path / "eval_train_greedy_episodes.csv")) == 2

    def test_train_abort_exit_code(self, tmp_path, monkeypatch):
        """A training abort exits with the training code"""
        def broken(self):
            raise TrainingError("non-finite loss")

        monkeypatch.setattr(TrainingPipeline, "run", broken)
        main(["gen-config", "--out", str(tmp_path / "c.json")])
        assert main(["train", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "run")]) == EXIT_TRAINING
