"""Unit tests for CEM action search, Bellman targets and the combined loss"""

from dataclasses import replace

import numpy as np
import pytest

from src.config.run_config import AuxConfig, CemConfig
from src.core.exceptions import UsageError
from src.env.tasks import task_registry
from src.netcore import autograd as ag
from src.netcore.autograd import Tensor
from src.netcore.batch import StateBatch
from src.netcore.network import Q_EPS
from src.netcore.params import LaggedParams, gradient_vector, lag_update
from src.pi_aux.ceb import CebBatch, ceb_loss
from src.pipeline.runner import build_network
from src.qtopt.bellman import LabeledSample, bellman_target, label_transitions, targets_from_values
from src.qtopt.cem import cem_optimize, cem_select_action
from src.qtopt.losses import bellman_loss, bellman_loss_tensor, combined_loss
from src.qtopt.policy import CemPolicy
from tests.conftest import make_config, random_transitions, with_section

ONE_D = CemConfig(action_low=(-1.0,), action_high=(1.0,))


def quadratic(state, context, actions):
    return -(actions[:, 0] - 0.3) ** 2


class TestCem:
    """Tests for the cross-entropy method"""

    def test_quadratic_optimum(self):
        """CEM finds the peak of a 1-D quadratic"""
        action = cem_select_action(None, None, quadratic, ONE_D, seed=0)
        assert abs(action[0] - 0.3) <= 0.05

    def test_monotone_critic_pushes_to_bound(self):
        """An increasing critic drives the action to the upper bound"""
        action = cem_select_action(None, None, lambda s, c, a: a[:, 0], ONE_D, seed=0)
        assert action[0] >= 0.9

    def test_constant_critic_is_reproducible(self):
        """A flat critic gives the same in-range action for the same seed"""
        flat = lambda s, c, a: np.zeros(len(a))  # noqa: E731
        first = cem_select_action(None, None, flat, ONE_D, seed=7)
        second = cem_select_action(None, None, flat, ONE_D, seed=7)
        np.testing.assert_array_equal(first, second)
        assert -1.0 <= first[0] <= 1.0

    def test_elite_mean_does_not_decrease(self):
        """Elite mean score never drops between iterations"""
        history = []
        cem_select_action(None, None, quadratic, ONE_D, seed=1, history=history)
        means = [float(h[0]) for h in history]
        assert len(means) == ONE_D.iterations
        assert all(b >= a - 1e-12 for a, b in zip(means, means[1:]))

    def test_batched_search_is_independent_per_state(self):
        """Each state in a batch finds its own optimum"""
        targets = np.array([-0.5, 0.0, 0.6])
        score = lambda a: -(a[:, :, 0] - targets[:, None]) ** 2  # noqa: E731
        best = cem_optimize(score, 3, ONE_D, np.random.default_rng(0))
        np.testing.assert_allclose(best[:, 0], targets, atol=0.05)

    def test_results_stay_in_bounds(self):
        """Optimized actions stay inside the action box"""
        cfg = CemConfig()
        best = cem_optimize(lambda a: a.sum(axis=2), 2, cfg, np.random.default_rng(0))
        assert best.shape == (2, 4)
        assert np.all(best <= 1.0) and np.all(best >= -1.0)


class TestBellmanTargets:
    """Tests for double-DQN targets"""

    def test_terminal_success(self):
        """A successful terminal step targets 1"""
        targets, _ = targets_from_values(np.array([1.0]), np.array([True]), np.array([0.2]), np.array([0.9]), 0.9)
        assert targets[0] == 1.0

    def test_terminal_failure(self):
        """A failed terminal step targets 0"""
        targets, _ = targets_from_values(np.array([0.0]), np.array([True]), np.array([0.7]), np.array([0.8]), 0.9)
        assert targets[0] == 0.0

    def test_discounted_min(self):
        """Non-terminal targets are γ times the smaller lagged value"""
        targets, value = targets_from_values(np.array([0.0]), np.array([False]), np.array([0.8]), np.array([0.6]), 0.9)
        assert targets[0] == pytest.approx(0.54)
        assert value[0] == pytest.approx(0.6)

    def test_targets_stay_in_unit_interval(self):
        """Targets lie in [0, 1] and equal the reward on terminal steps"""
        rng = np.random.default_rng(0)
        n = 1000
        rewards = rng.integers(0, 2, size=n).astype(float)
        dones = (rewards == 1.0) | (rng.uniform(size=n) < 0.3)
        targets, _ = targets_from_values(rewards, dones, rng.uniform(size=n), rng.uniform(size=n), 0.9)
        assert np.all((targets >= 0.0) & (targets <= 1.0))
        np.testing.assert_array_equal(targets[dones], rewards[dones])

    def test_labels_from_lagged_critics(self, network, lagged, transitions, tiny_config):
        """Labels carry the θ̄1 version they were computed under"""
        samples = label_transitions(transitions, network, lagged, 0.9, tiny_config.cem, np.random.default_rng(0))
        assert len(samples) == len(transitions)
        for sample in samples:
            assert 0.0 <= sample.target <= 1.0
            assert sample.target_version == lagged.theta1.version
            assert sample.next_action.shape == (4,)
            if sample.transition.done:
                assert sample.target == sample.transition.reward

    def test_single_transition_is_seeded(self, network, lagged, transitions, tiny_config):
        """A single target is a function of its seed"""
        first = bellman_target(transitions[0], lagged, 0.9, tiny_config.cem, network, seed=3)
        second = bellman_target(transitions[0], lagged, 0.9, tiny_config.cem, network, seed=3)
        assert first[0] == second[0]
        np.testing.assert_array_equal(first[1], second[1])

    def test_labeled_sample_rejects_bad_terminal_target(self, transitions):
        """Terminal samples must target their reward"""
        terminal = next(t for t in transitions if t.done)
        with pytest.raises(UsageError):
            LabeledSample(terminal, 0.5, np.zeros(4), 0)


class TestBellmanLoss:
    """Tests for the cross-entropy Bellman loss"""

    def test_half_prediction_costs_log_two(self):
        """Predicting 0.5 costs log 2 for any target"""
        for target in (0.0, 0.3, 1.0):
            assert bellman_loss(np.array([0.5]), np.array([target])) == pytest.approx(np.log(2.0))

    def test_confident_correct_prediction(self):
        """A confident correct prediction costs almost nothing"""
        assert bellman_loss(np.array([1.0]), np.array([1.0])) == pytest.approx(Q_EPS, rel=1e-3)

    def test_logit_gradient_is_error(self):
        """Gradient with respect to the logit is (q - target) / N"""
        logits = Tensor(np.array([-1.0, 0.2, 2.0]), requires_grad=True)
        targets = np.array([0.0, 0.54, 1.0])
        q = ag.sigmoid(logits)
        bellman_loss_tensor(q, targets).backward()
        np.testing.assert_allclose(logits.grad, (q.data - targets) / 3.0, atol=1e-12)


def _samples(config, network, theta):
    lagged = LaggedParams.from_params(theta, config.training.tau, config.training.snapshot_period)
    transitions = random_transitions(config, n_episodes=1)
    samples = label_transitions(transitions, network, lagged, 0.9, config.cem, np.random.default_rng(0))
    return lagged, samples


class TestCombinedLoss:
    """Tests for Bellman + weighted CEB"""

    def test_aux_off_is_plain_qtopt(self):
        """Without the auxiliary the loss and gradient are the Bellman ones"""
        config = with_section(make_config(), "aux", enabled=False)
        network = build_network(config, task_registry(config.env))
        theta = network.init_params(0)
        lagged, samples = _samples(config, network, theta)
        out = combined_loss(samples, network, theta, lagged, config.aux)

        transitions = [s.transition for s in samples]
        states = StateBatch.from_items([t.obs for t in transitions], [t.context for t in transitions])
        w = theta.bind(trainable=True)
        embedding = network.encode_state(states, np.stack([t.action for t in transitions]), w)
        plain = bellman_loss_tensor(network.q_value(embedding, w), np.array([s.target for s in samples]))
        assert out.ceb is None
        assert out.total == pytest.approx(float(plain.data))
        np.testing.assert_allclose(out.gradient, gradient_vector(plain, w, theta.layout), atol=1e-12)

    def test_ceb_weighting_and_gradient_sum(self, network, theta, tiny_config):
        """Total loss and gradient are Bellman plus the weighted CEB term"""
        lagged, samples = _samples(tiny_config, network, theta)
        aux = tiny_config.aux
        out = combined_loss(samples, network, theta, lagged, aux)
        assert out.total == pytest.approx(out.bellman + 0.01 * out.ceb.loss)

        transitions = [s.transition for s in samples]
        states = StateBatch.from_items([t.obs for t in transitions], [t.context for t in transitions])
        actions = np.stack([t.action for t in transitions])
        w_q = theta.bind(trainable=True)
        bellman = bellman_loss_tensor(network.q_value(network.encode_state(states, actions, w_q), w_q),
                                      np.array([s.target for s in samples]))
        g_bellman = gradient_vector(bellman, w_q, theta.layout)

        w_c = theta.bind(trainable=True)
        batch = CebBatch(
            x_states=states,
            x_actions=actions,
            y_states=StateBatch.from_items([t.next_obs for t in transitions], [t.context for t in transitions]),
            y_actions=np.stack([s.next_action for s in samples]),
            rewards=np.array([t.reward for t in transitions]),
            beta=aux.beta,
            forward_version=theta.version,
            backward_version=lagged.theta1.version,
        )
        g_ceb = gradient_vector(ceb_loss(batch, network, theta, lagged, aux, weights=w_c).loss_tensor, w_c,
                                theta.layout)
        np.testing.assert_allclose(out.gradient, g_bellman + 0.01 * g_ceb, rtol=1e-9, atol=1e-12)

    def test_mixed_stale_labels_are_accepted(self, network, theta, tiny_config):
        """Samples labeled under several older θ̄1 versions train together"""
        lagged, samples = _samples(tiny_config, network, theta)
        current = lag_update(theta, lagged, step=3)
        mixed = [replace(s, target_version=i % 3) for i, s in enumerate(samples)]
        out = combined_loss(mixed, network, theta, current, tiny_config.aux)
        assert np.isfinite(out.total)

    def test_labels_from_newer_lag_rejected(self, network, theta, tiny_config):
        """A sample labeled under a θ̄1 ahead of the learner's is refused"""
        lagged, samples = _samples(tiny_config, network, theta)
        ahead = samples[:-1] + [replace(samples[-1], target_version=lagged.theta1.version + 1)]
        with pytest.raises(UsageError, match="labeled under"):
            combined_loss(ahead, network, theta, lagged, tiny_config.aux)

    def test_empty_batch(self, network, theta, lagged, tiny_config):
        """An empty sample batch is a usage error"""
        with pytest.raises(UsageError):
            combined_loss([], network, theta, lagged, tiny_config.aux)

    def test_aux_on_needs_heads(self, tiny_config):
        """Enabling the auxiliary on a network without heads is refused"""
        config = with_section(tiny_config, "aux", enabled=False)
        network = build_network(config, task_registry(config.env))
        theta = network.init_params(0)
        lagged, samples = _samples(config, network, theta)
        with pytest.raises(UsageError):
            combined_loss(samples, network, theta, lagged, AuxConfig(enabled=True))


class TestCemPolicy:
    """Tests for greedy and ε-greedy action selection"""

    def test_greedy_is_deterministic_per_seed(self, network, theta, transitions, tiny_config):
        """Greedy actions repeat for the same generator seed"""
        obs, context = transitions[0].obs, transitions[0].context
        a = CemPolicy(network, theta, tiny_config.cem, np.random.default_rng(5))(obs, context)
        b = CemPolicy(network, theta, tiny_config.cem, np.random.default_rng(5))(obs, context)
        np.testing.assert_array_equal(a, b)

    def test_full_exploration_is_uniform(self, network, theta, transitions, tiny_config):
        """With ε=1 actions are spread over the whole box"""
        policy = CemPolicy(network, theta, tiny_config.cem, np.random.default_rng(0), eps=1.0)
        actions = np.stack([policy(transitions[0].obs, transitions[0].context) for _ in range(200)])
        assert actions.min() >= -1.0 and actions.max() <= 1.0
        assert actions.std(axis=0).min() > 0.3
