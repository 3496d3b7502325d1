"""Cross-entropy method over bounded continuous actions"""

from typing import Any, Callable, List, Optional

import numpy as np

from src.config.run_config import CemConfig

# (B, N, A) candidates -> (B, N) scores
BatchScoreFn = Callable[[np.ndarray], np.ndarray]
# (state, context, (N, A) candidates) -> (N,) scores
StateScoreFn = Callable[[Any, Any, np.ndarray], np.ndarray]


def cem_optimize(
    score: BatchScoreFn,
    batch_size: int,
    cfg: CemConfig,
    rng: np.random.Generator,
    history: Optional[List[np.ndarray]] = None,
) -> np.ndarray:
    """
    Independent CEM searches for B states at once

    Each iteration samples N actions per state from a diagonal Gaussian, clips them
    to the bounds, keeps the top M (stable sort, so equal scores favor the lower
    sample index), and refits mean and σ on the elites with σ floored.

    Args:
        score: Batched critic
        batch_size: B
        cfg: CemConfig
        rng: Sampling stream
        history: If given, receives the (B,) elite-mean score of every iteration

    Returns:
        (B, A) final means clipped to the bounds
    """
    low = np.asarray(cfg.action_low, dtype=np.float64)
    high = np.asarray(cfg.action_high, dtype=np.float64)
    dim = low.size
    mean = np.tile((low + high) / 2.0, (batch_size, 1))
    sigma = np.full((batch_size, dim), cfg.init_sigma)

    for _ in range(cfg.iterations):
        noise = rng.standard_normal((batch_size, cfg.n_samples, dim))
        samples = np.clip(mean[:, None, :] + sigma[:, None, :] * noise, low, high)
        scores = np.asarray(score(samples), dtype=np.float64)
        order = np.argsort(-scores, axis=1, kind="stable")[:, :cfg.n_elites]
        elites = np.take_along_axis(samples, order[:, :, None], axis=1)
        if history is not None:
            history.append(np.take_along_axis(scores, order, axis=1).mean(axis=1))
        mean = elites.mean(axis=1)
        sigma = np.maximum(elites.std(axis=1), cfg.sigma_floor)

    return np.clip(mean, low, high)


def cem_select_action(
    state: Any,
    context: Any,
    q: StateScoreFn,
    cfg: CemConfig,
    seed: int | np.random.Generator,
    history: Optional[List[np.ndarray]] = None,
) -> np.ndarray:
    """
    Greedy action for a single state

    Args:
        state: Observation passed through to q
        context: TaskContext passed through to q
        q: Scores (N, A) candidate actions at (state, context)
        cfg: CemConfig
        seed: Seed or generator; same seed gives the same action

    Returns:
        (A,) action within bounds
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    best = cem_optimize(lambda a: q(state, context, a[0])[None, :], 1, cfg, rng, history)
    return best[0]
