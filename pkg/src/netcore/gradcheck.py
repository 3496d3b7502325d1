"""Central finite-difference verification of analytic gradients"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from src.netcore.autograd import Tensor
from src.netcore.params import ParameterSet, gradient_vector

LossFn = Callable[[Dict[str, Tensor]], Tensor]


@dataclass
class GradCheckResult:
    coords: np.ndarray
    analytic: np.ndarray
    numeric: np.ndarray

    @property
    def relative_error(self) -> float:
        diff = np.linalg.norm(self.analytic - self.numeric)
        scale = np.linalg.norm(self.analytic) + np.linalg.norm(self.numeric)
        return float(diff / max(scale, 1e-12))


def check_gradients(
    loss_fn: LossFn,
    params: ParameterSet,
    rng: np.random.Generator,
    h: float = 1e-4,
    n_coords: Optional[int] = 64,
) -> GradCheckResult:
    """
    Compare gradient_vector() against (L(θ + h e_i) - L(θ - h e_i)) / 2h

    Args:
        loss_fn: Builds a scalar loss from bound weights
        params: Point of evaluation
        rng: Picks the coordinates to compare
        h: Finite-difference step
        n_coords: Number of coordinates (None = all)
    """
    weights = params.bind(trainable=True)
    analytic = gradient_vector(loss_fn(weights), weights, params.layout)

    size = params.layout.size
    if n_coords is None or n_coords >= size:
        coords = np.arange(size)
    else:
        coords = np.sort(rng.choice(size, size=n_coords, replace=False))

    numeric = np.zeros(len(coords))
    for j, i in enumerate(coords):
        plus = params.vector.copy()
        minus = params.vector.copy()
        plus[i] += h
        minus[i] -= h
        up = loss_fn(params.with_vector(plus, params.version).bind()).data
        down = loss_fn(params.with_vector(minus, params.version).bind()).data
        numeric[j] = float(up - down) / (2.0 * h)
    return GradCheckResult(coords=coords, analytic=analytic[coords], numeric=numeric)
