"""Greedy and ε-greedy CEM policies over a published critic"""

import numpy as np

from src.config.run_config import CemConfig
from src.env.types import Observation, TaskContext
from src.netcore.batch import StateBatch
from src.netcore.network import PIQTNetwork
from src.netcore.params import ParameterSet
from src.qtopt.cem import cem_select_action


class CemPolicy:
    """
    argmax_a Q(s, a) by CEM; with probability eps the action is replaced by a
    uniform in-bounds draw. The critic is fixed at construction.
    """

    def __init__(
        self,
        network: PIQTNetwork,
        params: ParameterSet,
        cfg: CemConfig,
        rng: np.random.Generator,
        eps: float = 0.0,
    ):
        self.network = network
        self.params = params
        self.cfg = cfg
        self.rng = rng
        self.eps = eps
        self._low = np.asarray(cfg.action_low, dtype=np.float64)
        self._high = np.asarray(cfg.action_high, dtype=np.float64)

    def __call__(self, obs: Observation, context: TaskContext) -> np.ndarray:
        if self.eps > 0.0 and self.rng.uniform() < self.eps:
            return self.rng.uniform(self._low, self._high)
        # visual features once per step, shared by all CEM iterations
        scorer = self.network.q_function(self.params, StateBatch.from_items([obs], [context]))
        return cem_select_action(obs, context, lambda s, c, a: scorer(a[None, :, :])[0], self.cfg, self.rng)
