"""Unit tests for the tabletop environment, task registry and contexts"""

import numpy as np
import pytest

from src.config.run_config import EnvConfig, TaskFamilyConfig
from src.core.exceptions import ConfigurationError, RegistryError, UsageError
from src.env.context import SKILL_INTENSITY, build_overlay
from src.env.policies import RandomPolicy, ScriptedExpert
from src.env.tabletop import TabletopEnv
from src.env.tasks import task_registry
from src.env.types import Action, ContextKind, Skill, Split, TaskSpec
from src.evalcli.evaluation import run_episode


def _env(**fields) -> TabletopEnv:
    config = EnvConfig(**fields)
    return TabletopEnv(config, task_registry(config))


class TestTaskRegistry:
    """Tests for task generation and the train / held-out split"""

    def test_split_is_deterministic(self):
        """Same split seed gives the same split"""
        config = EnvConfig(holdout_fraction=0.2, split_seed=3)
        first = [(t.task_id, t.split) for t in task_registry(config)]
        second = [(t.task_id, t.split) for t in task_registry(config)]
        assert first == second

    def test_task_ids_are_unique_and_indexed(self):
        """Task ids are unique and indices follow registry order"""
        registry = task_registry(EnvConfig())
        ids = [t.task_id for t in registry]
        assert len(ids) == len(set(ids))
        assert [t.index for t in registry] == list(range(len(registry)))

    def test_move_near_pairs_are_ordered_and_distinct(self):
        """MoveNear enumerates ordered pairs of distinct objects"""
        config = EnvConfig(families=[TaskFamilyConfig(skill="move_near", objects=["apple", "sponge", "coke_can"])],
                           holdout_fraction=0.0)
        registry = task_registry(config)
        assert len(registry) == 6
        assert all(t.targets[0] != t.targets[1] for t in registry)

    def test_holdout_fraction_leaves_training_tasks(self):
        """A large held-out fraction still leaves one training task"""
        config = EnvConfig(families=[TaskFamilyConfig(skill="pick", objects=["apple", "sponge"])],
                           holdout_fraction=0.9)
        registry = task_registry(config)
        assert len(registry.train) == 1
        assert len(registry.heldout) == 1

    def test_holdout_count_is_rounded_over_whole_registry(self):
        """Held-out count is taken once over all families, then apportioned"""
        config = EnvConfig(
            families=[
                TaskFamilyConfig(skill="pick", objects=["apple", "sponge", "orange", "coke_can",
                                                        "rxbar_chocolate", "blue_chip_bag"]),
                TaskFamilyConfig(skill="knock", objects=["7up_can", "coke_can", "green_can", "pepsi_can"]),
                TaskFamilyConfig(skill="move_near", objects=["apple", "sponge", "orange", "coke_can", "pepsi_can"]),
            ],
            holdout_fraction=0.1,
        )
        registry = task_registry(config)
        assert (len(registry), len(registry.train), len(registry.heldout)) == (30, 27, 3)
        train_ids = {t.task_id for t in registry.train}
        assert train_ids.isdisjoint(t.task_id for t in registry.heldout)

    def test_holdout_objects_never_train(self):
        """Every task touching a withheld object is held out"""
        config = EnvConfig(
            families=[TaskFamilyConfig(skill="pick", holdout_objects=True)],
            holdout_fraction=0.1,
        )
        registry = task_registry(config)
        train_objects = {t.targets[0] for t in registry.train}
        held_objects = {t.targets[0] for t in registry.heldout}
        assert held_objects - train_objects

    def test_knock_family_rejects_soft_objects(self):
        """Knock families accept only knockable objects"""
        config = EnvConfig(families=[TaskFamilyConfig(skill="knock", objects=["apple", "coke_can"])])
        with pytest.raises(ConfigurationError, match="not knockable"):
            task_registry(config)

    def test_unknown_object_rejected(self):
        """Objects outside the catalog are rejected"""
        config = EnvConfig(families=[TaskFamilyConfig(skill="pick", objects=["apple", "teapot"])])
        with pytest.raises(ConfigurationError, match="teapot"):
            task_registry(config)

    def test_unknown_task_lookup(self):
        """Looking up an unknown task raises RegistryError"""
        registry = task_registry(EnvConfig())
        with pytest.raises(RegistryError):
            registry.get("pick:teapot")

    def test_task_spec_arity(self):
        """MoveNear needs two targets"""
        with pytest.raises(ConfigurationError):
            TaskSpec(skill=Skill.MOVE_NEAR, targets=("apple",))


class TestTabletopEnv:
    """Tests for reset / step semantics"""

    def test_reset_is_reproducible(self):
        """Same task and seed give the same scene"""
        env = _env(n_distractors=2)
        task = env.registry.train[0]
        obs_a, ctx_a = env.reset(task, seed=11)
        obs_b, ctx_b = env.reset(task, seed=11)
        np.testing.assert_array_equal(obs_a.visual, obs_b.visual)
        np.testing.assert_array_equal(ctx_a.overlay, ctx_b.overlay)

    def test_observation_ranges(self):
        """Observations have the documented shapes and lie in [0, 1]"""
        env = _env()
        obs, _ = env.reset(env.registry.train[0], seed=0)
        assert obs.visual.shape == (16, 16, 3)
        assert obs.proprio.shape == (4,)
        assert obs.visual.min() >= 0.0 and obs.visual.max() <= 1.0
        assert obs.proprio.min() >= 0.0 and obs.proprio.max() <= 1.0

    def test_episode_ends_at_step_limit(self):
        """Episodes without success end at the step limit"""
        env = _env(step_limit=5)
        env.reset(env.registry.train[0], seed=0)
        done = False
        steps = 0
        while not done:
            _, reward, done = env.step(np.zeros(4))
            steps += 1
            assert reward in (0.0, 1.0)
        assert steps == 5

    def test_step_after_done_raises(self):
        """Stepping a finished episode raises UsageError"""
        env = _env(step_limit=1)
        env.reset(env.registry.train[0], seed=0)
        env.step(np.zeros(4))
        with pytest.raises(UsageError):
            env.step(np.zeros(4))

    def test_step_before_reset_raises(self):
        """Stepping before reset raises UsageError"""
        env = _env()
        with pytest.raises(UsageError):
            env.step(np.zeros(4))

    def test_non_finite_action_raises(self):
        """NaN actions are rejected"""
        env = _env()
        env.reset(env.registry.train[0], seed=0)
        with pytest.raises(UsageError):
            env.step(np.array([np.nan, 0.0, 0.0, 0.0]))

    def test_actions_are_clipped(self):
        """Action components are clipped to [-1, 1]"""
        action = Action(np.array([3.0, -2.0, 0.5, 0.0]))
        np.testing.assert_array_equal(action.vector, [1.0, -1.0, 0.5, 0.0])

    def test_concurrent_control_applies_previous_action(self):
        """Concurrent mode applies each action one step late"""
        env = _env(control_mode="concurrent", n_distractors=0)
        env.reset(env.registry.train[0], seed=0)
        before = env.state
        env.step(np.array([1.0, 0.0, 0.0, 1.0]))
        after_first = env.state
        assert after_first.gripper_x == before.gripper_x
        env.step(np.zeros(4))
        assert env.state.gripper_x == before.gripper_x + 2

    @pytest.mark.parametrize("skill", ["pick", "move_near", "knock"])
    def test_expert_solves_each_skill(self, skill):
        """Scripted expert succeeds on every skill across several scene seeds"""
        env = _env(grid_size=8, families=[TaskFamilyConfig(skill=skill)], holdout_fraction=0.0)
        expert = ScriptedExpert(env)
        for task in env.registry.train[:4]:
            for seed in range(3):
                transitions = run_episode(env, expert, task, seed=seed)
                assert transitions[-1].reward == 1.0, f"{task.task_id} seed {seed}"

    def test_move_near_reset_never_starts_solved(self):
        """MoveNear scenes with the pair already near are re-sampled"""
        env = _env(grid_size=4, n_distractors=0, holdout_fraction=0.0,
                   families=[TaskFamilyConfig(skill="move_near", objects=["apple", "sponge"])])
        task = env.registry.get("move_near:apple:sponge")
        for seed in range(30):
            env.reset(task, seed=seed)
            a, b = (env.state.objects[name] for name in task.targets)
            assert np.hypot(a.x - b.x, a.y - b.y) > env.config.near_radius
            assert not env.success

    def test_success_ignores_distractor_placement_swap(self):
        """Swapping the poses of two distractors leaves the success predicate unchanged"""
        env = _env(grid_size=8, n_distractors=2, families=[TaskFamilyConfig(skill="knock")],
                   holdout_fraction=0.0)
        expert = ScriptedExpert(env)
        task = env.registry.train[0]
        for seed in range(3):
            env.reset(task, seed=seed)
            states = [env.state]
            done = False
            while not done:
                _, _, done = env.step(expert(None, None))
                states.append(env.state)
            assert env.success
            for state in states:
                first, second = [n for n in state.objects if n not in task.targets]
                swapped = state.copy()
                a, b = swapped.objects[first], swapped.objects[second]
                (a.x, a.y, a.z, a.upright), (b.x, b.y, b.z, b.upright) = (b.x, b.y, b.z, b.upright), (a.x, a.y, a.z, a.upright)
                assert env._is_success(task, swapped) == env._is_success(task, state)

    def test_random_policy_stays_in_bounds(self):
        """Random actions stay inside the action box"""
        policy = RandomPolicy(np.random.default_rng(0))
        draws = np.stack([policy(None, None) for _ in range(100)])
        assert draws.min() >= -1.0 and draws.max() <= 1.0


class TestTaskContext:
    """Tests for image-mask and embedding contexts"""

    def test_overlay_only_inside_target_squares(self):
        """Overlay is nonzero only on the target squares, with skill intensities"""
        task = TaskSpec(skill=Skill.MOVE_NEAR, targets=("apple", "sponge"))
        overlay = build_overlay(task, [(0, 0), (5, 5)], grid_size=8, mask_size=3)
        assert overlay.shape == (8, 8, 1)
        assert overlay[0, 0, 0] == SKILL_INTENSITY[(Skill.MOVE_NEAR, 0)]
        assert overlay[5, 5, 0] == SKILL_INTENSITY[(Skill.MOVE_NEAR, 1)]
        assert overlay[3, 3, 0] == 0.0
        assert np.count_nonzero(overlay) == 4 + 9

    def test_image_context_is_frozen_first_frame(self):
        """Image context keeps the first frame after the scene changes"""
        env = _env()
        obs, context = env.reset(env.registry.train[0], seed=2)
        assert context.kind == ContextKind.IMAGE_MASK
        np.testing.assert_array_equal(context.first_frame, obs.visual)
        assert context.channels().shape == (16, 16, 4)
        obs_next, _, _ = env.step(np.array([1.0, 1.0, 0.0, 1.0]))
        np.testing.assert_array_equal(env.context.first_frame, obs.visual)

    def test_embedding_context_has_no_channels(self):
        """Embedding contexts carry a task index and no image"""
        env = _env(context_kind="embedding")
        task = env.registry.train[3]
        _, context = env.reset(task, seed=0)
        assert context.task_index == task.index
        with pytest.raises(UsageError):
            context.channels()

    def test_heldout_tasks_are_resettable(self):
        """Held-out tasks can be reset for evaluation"""
        env = _env(holdout_fraction=0.3)
        task = env.registry.split(Split.HELDOUT)[0]
        _, context = env.reset(task, seed=0)
        assert context.task_index == task.index
