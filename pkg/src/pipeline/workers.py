"""Collector, Bellman-updater and learner workers"""

import threading
from collections import Counter
from typing import Callable, Dict, List, Optional

import numpy as np

from src.config.run_config import RunConfig
from src.core.base_worker import BaseWorker
from src.core.exceptions import TrainingError, UsageError
from src.env.tabletop import TabletopEnv
from src.env.types import Action, TaskSpec, Transition
from src.netcore.batch import StateBatch
from src.netcore.network import PIQTNetwork
from src.netcore.params import lag_update
from src.pipeline.metrics import CsvStream, EpisodeRecord, epsilon
from src.pipeline.param_store import ParameterStore
from src.pipeline.persistence import TrainingState
from src.pipeline.replay import ShardRouter
from src.pipeline.train_buffer import TrainBuffer
from src.qtopt.bellman import LabeledSample, bellman_targets, label_transitions
from src.qtopt.losses import combined_loss, td_errors
from src.qtopt.policy import CemPolicy
from src.utils.seeding import derive_rng

RNG_BOUND = 2 ** 31 - 1


class Collector(BaseWorker):
    """
    Runs ε-greedy CEM episodes under the latest published θ̄1 and writes
    finished episodes to replay.
    """

    def __init__(
        self,
        collector_id: int,
        env: TabletopEnv,
        tasks: List[TaskSpec],
        network: PIQTNetwork,
        store: ParameterStore,
        router: ShardRouter,
        config: RunConfig,
        episode_sink: Optional[Callable[[EpisodeRecord], None]] = None,
        stop_event: Optional[threading.Event] = None,
    ):
        super().__init__(f"collector-{collector_id}", stop_event)
        if not tasks:
            raise UsageError("collector needs at least one training task")
        self.collector_id = collector_id
        self.env = env
        self.tasks = list(tasks)
        self.network = network
        self.store = store
        self.router = router
        self.config = config
        self.episode_sink = episode_sink
        self.episodes = 0
        self.discarded = 0

    def run_once(self) -> None:
        if not self.store.wait_for_first(self.stop_event):
            return
        self.collect_episode(self.episodes)

    def collect_episode(self, counter: int) -> Optional[EpisodeRecord]:
        """
        One episode keyed by (seed, collector id, counter)

        Returns:
            EpisodeRecord, or None when the environment rejected the episode
        """
        training = self.config.training
        published = self.store.latest()
        rng = derive_rng(training.seed, f"collector-{self.collector_id}", counter)
        task = self.tasks[int(rng.integers(len(self.tasks)))]
        scene_seed = int(rng.integers(RNG_BOUND))
        eps = epsilon(published.version, training.total_steps, training.eps_start,
                      training.eps_end, training.eps_decay_fraction)
        policy = CemPolicy(self.network, published.lagged.theta1, self.config.cem, rng, eps=eps)
        self.episodes = counter + 1

        transitions: List[Transition] = []
        try:
            obs, context = self.env.reset(task, seed=scene_seed)
            done = False
            while not done:
                action = Action(policy(obs, context)).vector
                next_obs, reward, done = self.env.step(action)
                transitions.append(Transition(obs, action, reward, next_obs, done, context, task.task_id))
                obs = next_obs
        except UsageError as e:
            self.discarded += 1
            self.log_warning(f"episode {counter} on {task.task_id} discarded: {e}")
            return None

        for t in transitions:
            self.router.insert(t)

        record = EpisodeRecord(
            task_id=task.task_id,
            split=task.split.value,
            success=int(transitions[-1].reward == 1.0),
            steps=len(transitions),
            mean_td_error=self._mean_td_error(transitions, published.lagged, counter),
            mean_infonce=None,
            seed=scene_seed,
        )
        if self.episode_sink is not None:
            self.episode_sink(record)
        return record

    def _mean_td_error(self, transitions: List[Transition], lagged, counter: int) -> float:
        rng = derive_rng(self.config.training.seed, f"collector-{self.collector_id}-td", counter)
        targets, _, _ = bellman_targets(
            transitions, self.network, lagged, self.config.training.gamma, self.config.cem, rng
        )
        states = StateBatch.from_items([t.obs for t in transitions], [t.context for t in transitions])
        q = self.network.q_values(lagged.theta1, states, np.stack([t.action for t in transitions]))
        return float(td_errors(q, targets).mean())


class BellmanUpdater(BaseWorker):
    """Samples replay uniformly, labels with the freshest lagged critics, feeds the learner"""

    def __init__(
        self,
        updater_id: int,
        network: PIQTNetwork,
        store: ParameterStore,
        router: ShardRouter,
        buffer: TrainBuffer,
        config: RunConfig,
        stop_event: Optional[threading.Event] = None,
    ):
        super().__init__(f"bellman-updater-{updater_id}", stop_event)
        self.updater_id = updater_id
        self.network = network
        self.store = store
        self.router = router
        self.buffer = buffer
        self.config = config
        self.batches = 0

    def run_once(self) -> None:
        if not self.store.wait_for_first(self.stop_event):
            return
        if not self.router.wait_for(self.config.training.min_replay_size, self.stop_event):
            return
        self.label_batch(self.batches, self.config.training.label_chunk)

    def label_batch(self, counter: int, n: int) -> List[LabeledSample]:
        """Label n replay samples keyed by (seed, updater id, counter) and push them downstream"""
        rng = derive_rng(self.config.training.seed, f"updater-{self.updater_id}", counter)
        self.batches = counter + 1
        transitions = self.router.sample(n, rng, self.stop_event)
        if not transitions:
            return []
        published = self.store.latest()
        samples = label_transitions(
            transitions, self.network, published.lagged, self.config.training.gamma, self.config.cem, rng
        )
        for sample in samples:
            if not self.buffer.put(sample, self.stop_event):
                break
        return samples


class Learner(BaseWorker):
    """
    The only writer of parameters: SGD with momentum on the combined loss,
    lag updates every step, publication every publish_interval steps.
    """

    def __init__(
        self,
        network: PIQTNetwork,
        state: TrainingState,
        store: ParameterStore,
        buffer: TrainBuffer,
        config: RunConfig,
        metrics: Optional[CsvStream] = None,
        on_checkpoint: Optional[Callable[[int], None]] = None,
        on_abort: Optional[Callable[[TrainingState], None]] = None,
        stop_event: Optional[threading.Event] = None,
    ):
        super().__init__("learner", stop_event)
        self.network = network
        self.state = state
        self.store = store
        self.buffer = buffer
        self.config = config
        self.metrics = metrics
        self.on_checkpoint = on_checkpoint
        self.on_abort = on_abort
        self.staleness: Counter = Counter()

    @property
    def step(self) -> int:
        return self.state.step

    @property
    def finished(self) -> bool:
        return self.state.step >= self.config.training.total_steps

    def run_once(self) -> None:
        if self.finished:
            self.stop_event.set()
            return
        samples = self.buffer.get_batch(self.config.training.batch_size, self.stop_event)
        if samples is None:
            return
        self.train_step(samples)
        if self.finished:
            self.log_info(f"✅ reached {self.state.step} learner steps")
            self.stop_event.set()

    def train_step(self, samples: List[LabeledSample]) -> Dict[str, object]:
        """
        One optimizer step

        Raises:
            TrainingError on non-finite loss, gradient or parameters, after the
            abort callback has saved the pre-step state
        """
        training = self.config.training
        state = self.state
        rng = derive_rng(training.seed, "learner", state.step)
        try:
            out = combined_loss(samples, self.network, state.theta, state.lagged, self.config.aux, rng)
            velocity = training.momentum * state.velocity - training.learning_rate * out.gradient
            theta = state.theta.with_vector(state.theta.vector + velocity, state.step + 1)
        except TrainingError as e:
            self.log_error(f"aborting at step {state.step}: {e}")
            if self.on_abort is not None:
                self.on_abort(state)
            raise

        current_lag = state.lagged.theta1.version
        for sample in samples:
            self.staleness[current_lag - sample.target_version] += 1

        state.step += 1
        state.theta = theta
        state.velocity = velocity
        state.lagged = lag_update(theta, state.lagged, state.step)

        if state.step % training.publish_interval == 0:
            self.store.publish(state.theta, state.lagged)

        row = {
            "step": state.step,
            "bellman_loss": out.bellman,
            "ceb_loss": out.ceb.loss if out.ceb is not None else None,
            "infonce": out.ceb.infonce if out.ceb is not None else None,
            "td_error_mean": out.td_error_mean,
            "eps": epsilon(state.step, training.total_steps, training.eps_start,
                           training.eps_end, training.eps_decay_fraction),
            "params_version": self.store.latest().version,
        }
        if self.metrics is not None:
            self.metrics.append(row)
        if state.step % training.checkpoint_interval == 0 and self.on_checkpoint is not None:
            self.on_checkpoint(state.step)
        return row
