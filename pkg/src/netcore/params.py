"""Flat parameter vectors with named blocks, lagged copies and gradient extraction"""

from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.exceptions import ConfigurationError, TrainingError
from src.netcore.autograd import Tensor


@dataclass(frozen=True)
class BlockSpec:
    name: str
    offset: int
    shape: Tuple[int, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @property
    def end(self) -> int:
        return self.offset + self.size


class ParameterLayout:
    """Ordered named blocks laid end to end over one vector"""

    def __init__(self, blocks: Sequence[Tuple[str, Sequence[int]]]):
        self._blocks: Dict[str, BlockSpec] = {}
        offset = 0
        for name, shape in blocks:
            if name in self._blocks:
                raise ConfigurationError(f"duplicate parameter block: {name}")
            spec = BlockSpec(name=name, offset=offset, shape=tuple(int(s) for s in shape))
            if spec.size < 1:
                raise ConfigurationError(f"parameter block {name} is empty")
            self._blocks[name] = spec
            offset = spec.end
        self.size = offset

    def __getitem__(self, name: str) -> BlockSpec:
        try:
            return self._blocks[name]
        except KeyError:
            raise ConfigurationError(f"no parameter block named {name}") from None

    def __iter__(self) -> Iterator[BlockSpec]:
        return iter(self._blocks.values())

    def __contains__(self, name: str) -> bool:
        return name in self._blocks

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ParameterLayout) and self.to_json() == other.to_json()

    def __len__(self) -> int:
        return len(self._blocks)

    @property
    def names(self) -> List[str]:
        return list(self._blocks)

    def to_json(self) -> List[dict]:
        return [{"name": b.name, "offset": b.offset, "shape": list(b.shape)} for b in self]

    @classmethod
    def from_json(cls, payload: List[dict]) -> "ParameterLayout":
        layout = cls([(item["name"], item["shape"]) for item in payload])
        for item, block in zip(payload, layout):
            if int(item["offset"]) != block.offset:
                raise ConfigurationError(f"layout block {block.name} has a gap or overlap")
        return layout


BlockFilter = Union[bool, Callable[[str], bool]]


@dataclass
class ParameterSet:
    """
    θ: a float64 vector plus the layout that names its blocks.
    version is the learner step that produced it.
    """

    vector: np.ndarray
    layout: ParameterLayout
    version: int = 0

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.ndim != 1 or self.vector.size != self.layout.size:
            raise ConfigurationError(
                f"parameter vector of size {self.vector.size} does not match layout size {self.layout.size}"
            )
        if not np.all(np.isfinite(self.vector)):
            raise TrainingError(f"non-finite parameters in version {self.version}")

    def block(self, name: str) -> np.ndarray:
        spec = self.layout[name]
        return self.vector[spec.offset:spec.end].reshape(spec.shape)

    def copy(self, version: Optional[int] = None) -> "ParameterSet":
        return ParameterSet(self.vector.copy(), self.layout, self.version if version is None else version)

    def frozen(self) -> "ParameterSet":
        """Read-only copy for publication to other workers"""
        published = self.copy()
        published.vector.setflags(write=False)
        return published

    def with_vector(self, vector: np.ndarray, version: int) -> "ParameterSet":
        return ParameterSet(vector, self.layout, version)

    def bind(self, trainable: BlockFilter = False) -> Dict[str, Tensor]:
        """
        Wrap every block as a graph leaf

        Args:
            trainable: True / False for all blocks, or a predicate on block names

        Returns:
            Block name -> Tensor; trainable leaves collect gradients on backward()
        """
        weights = {}
        for spec in self.layout:
            grad = trainable(spec.name) if callable(trainable) else bool(trainable)
            data = self.block(spec.name)
            weights[spec.name] = Tensor(data.copy() if grad else data, requires_grad=grad)
        return weights


@dataclass
class LaggedParams:
    """θ̄1 (exponential average) and θ̄2 (periodic snapshot) of the learner's θ"""

    theta1: ParameterSet
    theta2: ParameterSet
    tau: float = 0.005
    period: int = 500

    @classmethod
    def from_params(cls, theta: ParameterSet, tau: float, period: int) -> "LaggedParams":
        return cls(theta1=theta.copy(), theta2=theta.copy(), tau=tau, period=period)

    def frozen(self) -> "LaggedParams":
        return LaggedParams(self.theta1.frozen(), self.theta2.frozen(), self.tau, self.period)


def lag_update(theta: ParameterSet, lagged: LaggedParams, step: int) -> LaggedParams:
    """
    θ̄1 <- (1 - τ) θ̄1 + τ θ every step; θ̄2 <- θ when step % period == 0

    Returns:
        New LaggedParams stamped with `step`; the inputs are left untouched
    """
    if theta.layout != lagged.theta1.layout:
        raise ConfigurationError("lagged parameters do not share the learner's layout")
    averaged = (1.0 - lagged.tau) * lagged.theta1.vector + lagged.tau * theta.vector
    theta1 = ParameterSet(averaged, theta.layout, step)
    theta2 = theta.copy(version=step) if step % lagged.period == 0 else lagged.theta2
    return LaggedParams(theta1, theta2, lagged.tau, lagged.period)


def gradient_vector(loss: Tensor, weights: Mapping[str, Tensor], layout: ParameterLayout) -> np.ndarray:
    """
    Run backward() on a scalar loss and gather leaf gradients into one flat vector

    Blocks unreachable from the loss (or bound as non-trainable) get zeros.

    Raises:
        TrainingError on non-finite gradients
    """
    loss.backward()
    grad = np.zeros(layout.size, dtype=np.float64)
    for spec in layout:
        leaf = weights.get(spec.name)
        if leaf is not None and leaf.requires_grad and leaf.grad is not None:
            grad[spec.offset:spec.end] = leaf.grad.reshape(-1)
    if not np.all(np.isfinite(grad)):
        bad = [s.name for s in layout if not np.all(np.isfinite(grad[s.offset:s.end]))]
        raise TrainingError(f"non-finite gradient in blocks: {', '.join(bad)}")
    return grad
