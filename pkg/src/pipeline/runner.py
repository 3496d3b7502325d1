"""Training pipeline assembly and schedules"""

import json
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from src.config.run_config import RunConfig, save_run_config
from src.config.settings import get_settings
from src.core.exceptions import ConfigurationError, RestoreError, TrainingError
from src.env.tabletop import TabletopEnv
from src.env.tasks import TaskRegistry, task_registry
from src.env.types import ContextKind
from src.logging_config.logger import setup_logger
from src.netcore.network import PIQTNetwork
from src.netcore.params import LaggedParams
from src.pipeline.metrics import EPISODE_COLUMNS, METRIC_COLUMNS, CsvStream, EpisodeRecord
from src.pipeline.param_store import ParameterStore
from src.pipeline.persistence import (
    TrainingState,
    load_replay,
    load_training_checkpoint,
    replay_path,
    save_replay,
    save_training_checkpoint,
)
from src.pipeline.replay import ShardRouter
from src.pipeline.train_buffer import TrainBuffer
from src.pipeline.workers import BellmanUpdater, Collector, Learner

logger = setup_logger(__name__)

METRICS_FILE = "metrics.csv"
EPISODES_FILE = "episodes.csv"
SUMMARY_FILE = "summary.json"
CHECKPOINT_DIR = "checkpoints"
FINAL_CHECKPOINT = "final.ckpt"
ABORT_CHECKPOINT = "nan_abort.ckpt"


def build_network(config: RunConfig, registry: TaskRegistry) -> PIQTNetwork:
    return PIQTNetwork(
        config.network,
        grid_size=config.env.grid_size,
        context_kind=config.env.context_kind,
        n_tasks=len(registry),
        aux_enabled=config.aux.enabled,
    )


def initial_state(config: RunConfig, network: PIQTNetwork) -> TrainingState:
    theta = network.init_params(config.training.seed)
    lagged = LaggedParams.from_params(theta, config.training.tau, config.training.snapshot_period)
    return TrainingState(theta=theta, lagged=lagged, velocity=np.zeros(network.layout.size), step=0)


@dataclass
class RunSummary:
    steps: int
    episodes: int
    discarded_episodes: int
    transitions_inserted: int
    transitions_resident: int
    transitions_evicted: int
    labeled_samples: int
    published_versions: int
    staleness: Dict[int, int] = field(default_factory=dict)
    wall_seconds: float = 0.0
    final_checkpoint: Optional[str] = None

    @property
    def conserved(self) -> bool:
        return self.transitions_inserted == self.transitions_resident + self.transitions_evicted


class TrainingPipeline:
    """
    Collectors -> replay shards -> Bellman updaters -> train buffer -> learner,
    with parameters flowing back through the parameter store.

    mode="sync" interleaves all workers on the calling thread in a fixed order,
    so a run is a pure function of its config. mode="threaded" gives every
    worker its own thread and lets them communicate only through the shards,
    the train buffer and published versions.
    """

    def __init__(self, config: RunConfig, out_dir: str | Path):
        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.registry = task_registry(config.env)
        self.network = build_network(config, self.registry)
        self.state = initial_state(config, self.network)

        training = config.training
        self.stop_event = threading.Event()
        self.store = ParameterStore()
        self.router = ShardRouter.build(training.n_replay_shards, training.shard_capacity)
        self.buffer = TrainBuffer(training.train_buffer_capacity)
        self.metrics = CsvStream(self.out_dir / METRICS_FILE, METRIC_COLUMNS, training.metrics_flush_every)
        self.episodes = CsvStream(self.out_dir / EPISODES_FILE, EPISODE_COLUMNS, training.metrics_flush_every)

        self.collectors = [
            Collector(
                i, TabletopEnv(config.env, self.registry), self.registry.train, self.network,
                self.store, self.router, config, self._record_episode, self.stop_event,
            )
            for i in range(training.n_collectors)
        ]
        self.updaters = [
            BellmanUpdater(i, self.network, self.store, self.router, self.buffer, config, self.stop_event)
            for i in range(training.n_bellman_updaters)
        ]
        self.learner = Learner(
            self.network, self.state, self.store, self.buffer, config, self.metrics,
            on_checkpoint=self._checkpoint, on_abort=self._abort, stop_event=self.stop_event,
        )
        self._schedule = {"collect": 0, "label": 0}
        self._resumed = False

    # ------------------------------------------------------------------ callbacks

    def _record_episode(self, record: EpisodeRecord) -> None:
        self.episodes.append(record.to_row())

    def _counters(self) -> Dict[str, object]:
        return {
            "schedule": dict(self._schedule),
            "collectors": [c.episodes for c in self.collectors],
            "updaters": [u.batches for u in self.updaters],
            "staleness": {str(k): v for k, v in self.learner.staleness.items()},
        }

    def checkpoint_path(self, step: int) -> Path:
        return self.out_dir / CHECKPOINT_DIR / f"step_{step:07d}.ckpt"

    def _save(self, path: Path) -> Path:
        self.metrics.flush()
        self.episodes.flush()
        self.state.counters = self._counters()
        save_training_checkpoint(path, self.state, self.config)
        if self.config.training.mode == "sync":
            save_replay(replay_path(path), self.router, ContextKind(self.config.env.context_kind))
        return path

    def _checkpoint(self, step: int) -> None:
        self._save(self.checkpoint_path(step))

    def _abort(self, state: TrainingState) -> None:
        self.metrics.flush()
        self.episodes.flush()
        save_training_checkpoint(self.out_dir / ABORT_CHECKPOINT, state, self.config, {"aborted": True})

    # ------------------------------------------------------------------ resume

    def resume(self, checkpoint: str | Path) -> None:
        """
        Continue a sync run from one of its checkpoints; replay contents and
        schedule counters come back too, so the remaining run matches an
        unbroken one.

        Raises:
            RestoreError on corrupt files or a checkpoint from another configuration
        """
        if self.config.training.mode != "sync":
            raise ConfigurationError("resume is supported in sync mode only")
        loaded = load_training_checkpoint(checkpoint, self.network)
        if loaded.config.model_dump(exclude={"training": {"total_steps"}}) != self.config.model_dump(
            exclude={"training": {"total_steps"}}
        ):
            raise RestoreError(f"{checkpoint} was written by a different run configuration")
        if loaded.state.step % self.config.training.publish_interval != 0:
            raise RestoreError(f"{checkpoint} is not at a publication boundary")

        load_replay(replay_path(checkpoint), self.router)
        counters = loaded.state.counters
        self.state = loaded.state
        self.learner.state = self.state
        self._schedule = {k: int(v) for k, v in counters.get("schedule", {}).items()} or self._schedule
        for collector, count in zip(self.collectors, counters.get("collectors", [])):
            collector.episodes = int(count)
        for updater, count in zip(self.updaters, counters.get("updaters", [])):
            updater.batches = int(count)
        self.learner.staleness.update({int(k): int(v) for k, v in counters.get("staleness", {}).items()})
        self._resumed = True
        logger.info(f"✅ Resumed from {checkpoint} at learner step {self.state.step}")

    # ------------------------------------------------------------------ schedules

    def run(self) -> RunSummary:
        save_run_config(self.config, self.out_dir / "config.json")
        started = time.monotonic()
        self.store.publish(self.state.theta, self.state.lagged)
        logger.info(
            f"Training '{self.config.name}' ({self.config.training.mode}) for "
            f"{self.config.training.total_steps} learner steps, aux={'on' if self.config.aux.enabled else 'off'}"
        )
        try:
            if self.config.training.mode == "sync":
                self._run_sync()
            else:
                self._run_threaded()
        finally:
            self.metrics.flush()
            self.episodes.flush()

        final = self._save(self.out_dir / FINAL_CHECKPOINT)
        summary = self._summary(time.monotonic() - started, final)
        (self.out_dir / SUMMARY_FILE).write_text(json.dumps(asdict(summary), indent=2), encoding="utf-8")
        logger.info(
            f"✅ Training finished: {summary.steps} steps, {summary.episodes} episodes, "
            f"{summary.transitions_inserted} transitions in {summary.wall_seconds:.1f}s"
        )
        return summary

    def _collect_next(self) -> None:
        n = self._schedule["collect"]
        collector = self.collectors[n % len(self.collectors)]
        collector.collect_episode(collector.episodes)
        self._schedule["collect"] = n + 1

    def _run_sync(self) -> None:
        training = self.config.training
        while len(self.router) < training.min_replay_size:
            self._collect_next()
        logger.info(f"Replay warm: {len(self.router)} transitions")

        while self.state.step < training.total_steps:
            if self.state.step % training.collect_every == 0:
                self._collect_next()
            remaining = training.batch_size
            while remaining > 0:
                n = self._schedule["label"]
                updater = self.updaters[n % len(self.updaters)]
                chunk = min(training.label_chunk, remaining)
                updater.label_batch(updater.batches, chunk)
                self._schedule["label"] = n + 1
                remaining -= chunk
            samples = self.buffer.get_batch(training.batch_size)
            self.learner.train_step(samples)
            if self.state.step % 1000 == 0:
                logger.info(f"step {self.state.step}/{training.total_steps}, replay {len(self.router)}")

    def _run_threaded(self) -> None:
        errors: List[BaseException] = []

        def guarded(worker):
            def target():
                try:
                    worker.run_forever()
                except BaseException as e:  # surfaced after join
                    errors.append(e)
            return target

        workers = [*self.collectors, *self.updaters, self.learner]
        threads = [threading.Thread(target=guarded(w), name=w.worker_name, daemon=True) for w in workers]
        for t in threads:
            t.start()
        self.stop_event.wait()
        timeout = get_settings().WORKER_JOIN_TIMEOUT_SECONDS
        for t in threads:
            t.join(timeout)
            if t.is_alive():
                logger.warning(f"worker {t.name} did not stop within {timeout}s")
        if errors:
            first = next((e for e in errors if isinstance(e, TrainingError)), errors[0])
            raise first

    def _summary(self, wall: float, final: Path) -> RunSummary:
        stats = self.router.stats()
        return RunSummary(
            steps=self.state.step,
            episodes=sum(c.episodes for c in self.collectors),
            discarded_episodes=sum(c.discarded for c in self.collectors),
            transitions_inserted=sum(s["inserted"] for s in stats),
            transitions_resident=sum(s["resident"] for s in stats),
            transitions_evicted=sum(s["evicted"] for s in stats),
            labeled_samples=self.buffer.put_count,
            published_versions=len(self.store.versions),
            staleness=dict(sorted(self.learner.staleness.items())),
            wall_seconds=round(wall, 3),
            final_checkpoint=str(final),
        )
