"""Shared encoder, Q head and forward / backward representation heads"""

from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config.run_config import NetworkConfig
from src.core.exceptions import ConfigurationError, UsageError
from src.env.types import ACTION_DIM, CONTEXT_CHANNELS, PROPRIO_DIM, VISUAL_CHANNELS, ContextKind
from src.logging_config.logger import setup_logger
from src.netcore import autograd as ag
from src.netcore.autograd import Tensor
from src.netcore.batch import StateBatch
from src.netcore.params import ParameterLayout, ParameterSet
from src.utils.seeding import derive_rng

logger = setup_logger(__name__)

Q_EPS = 1e-6
Weights = Dict[str, Tensor]
ArrayOrTensor = Union[np.ndarray, Tensor]

ENCODER_PREFIX = "encoder."
Q_PREFIX = "q_head."
PI_FORWARD_PREFIX = "pi_forward."
PI_BACKWARD_PREFIX = "pi_backward."


def _conv_out(size: int) -> int:
    # 3x3, stride 2, pad 1
    return (size + 2 - 3) // 2 + 1


class PIQTNetwork:
    """
    Function approximator over one flat ParameterSet.

    The encoder maps (s_v, ctx image) to visual features and adds a linear
    projection of (a, s_p, task embedding) element-wise; the Q head squashes
    an MLP of the embedding through a sigmoid. When the auxiliary is enabled
    the layout also carries the forward head μe(x) and the backward head μb(y),
    both emitting unit vectors.
    """

    def __init__(
        self,
        config: NetworkConfig,
        grid_size: int,
        context_kind: ContextKind | str,
        n_tasks: int,
        aux_enabled: bool = True,
    ):
        self.config = config
        self.grid_size = grid_size
        self.context_kind = ContextKind(context_kind)
        self.n_tasks = n_tasks
        self.aux_enabled = aux_enabled
        self._act = ag.relu if config.activation == "relu" else ag.tanh
        self.layout = ParameterLayout(self._block_shapes())
        logger.debug(f"Network layout: {len(self.layout)} blocks, {self.layout.size} parameters")

    # ------------------------------------------------------------------ layout

    @property
    def input_channels(self) -> int:
        extra = CONTEXT_CHANNELS if self.context_kind == ContextKind.IMAGE_MASK else 0
        return VISUAL_CHANNELS + extra

    @property
    def has_pi_heads(self) -> bool:
        return self.aux_enabled

    def _mlp_shapes(self, prefix: str, width_in: int, hidden: Sequence[int], width_out: int) -> List[Tuple[str, Tuple[int, ...]]]:
        shapes = []
        for i, width in enumerate(hidden):
            shapes += [(f"{prefix}l{i}.w", (width_in, width)), (f"{prefix}l{i}.b", (width,))]
            width_in = width
        shapes += [(f"{prefix}out.w", (width_in, width_out)), (f"{prefix}out.b", (width_out,))]
        return shapes

    def _block_shapes(self) -> List[Tuple[str, Tuple[int, ...]]]:
        cfg = self.config
        d_e = cfg.embedding_dim
        g = self.grid_size
        shapes: List[Tuple[str, Tuple[int, ...]]] = []

        if cfg.encoder_mode == "conv-tiny":
            c1, c2 = cfg.conv_channels
            shapes += [
                ("encoder.conv1.w", (3, 3, self.input_channels, c1)),
                ("encoder.conv1.b", (c1,)),
                ("encoder.conv2.w", (3, 3, c1, c2)),
                ("encoder.conv2.b", (c2,)),
            ]
            flat = _conv_out(_conv_out(g)) ** 2 * c2
        else:
            flat = g * g * self.input_channels
        shapes += [("encoder.visual.w", (flat, d_e)), ("encoder.visual.b", (d_e,))]

        cond_in = ACTION_DIM + PROPRIO_DIM
        if self.context_kind == ContextKind.EMBEDDING:
            shapes.append(("encoder.task_table", (self.n_tasks, cfg.task_embedding_dim)))
            cond_in += cfg.task_embedding_dim
        shapes += [("encoder.cond.w", (cond_in, d_e)), ("encoder.cond.b", (d_e,))]

        shapes += self._mlp_shapes(Q_PREFIX, d_e, cfg.q_hidden, 1)
        if self.aux_enabled:
            shapes += self._mlp_shapes(PI_FORWARD_PREFIX, d_e, cfg.pi_hidden, cfg.z_dim)
            shapes += self._mlp_shapes(PI_BACKWARD_PREFIX, d_e + 1, cfg.pi_hidden, cfg.z_dim)
        return shapes

    def init_params(self, seed: int) -> ParameterSet:
        """
        Uniform(±1/sqrt(fan_in)) weights, zero biases, N(0, 0.1²) task table.
        Each block draws from its own (seed, block) stream so resizing one head
        leaves the others' initial values unchanged.
        """
        vector = np.zeros(self.layout.size)
        for spec in self.layout:
            rng = derive_rng(seed, "init", spec.name)
            if spec.name.endswith(".b"):
                continue
            if spec.name == "encoder.task_table":
                values = rng.normal(0.0, 0.1, size=spec.shape)
            else:
                fan_in = int(np.prod(spec.shape[:-1]))
                bound = 1.0 / np.sqrt(fan_in)
                values = rng.uniform(-bound, bound, size=spec.shape)
            vector[spec.offset:spec.end] = values.reshape(-1)
        return ParameterSet(vector, self.layout, version=0)

    # ------------------------------------------------------------------ pieces

    def _check_batch(self, batch: StateBatch) -> None:
        g = self.grid_size
        if batch.visual.shape[1:] != (g, g, VISUAL_CHANNELS) or batch.proprio.shape[1:] != (PROPRIO_DIM,):
            raise ConfigurationError(
                f"state shapes {batch.visual.shape[1:]} / {batch.proprio.shape[1:]} do not match grid {g}"
            )
        if batch.context_kind != self.context_kind:
            raise ConfigurationError(
                f"network expects {self.context_kind.value} contexts, got {batch.context_kind.value}"
            )
        if self.context_kind == ContextKind.IMAGE_MASK and batch.context_image.shape[1:] != (g, g, CONTEXT_CHANNELS):
            raise ConfigurationError(f"context image shape {batch.context_image.shape[1:]} does not match grid {g}")

    def _dense(self, h: ArrayOrTensor, w: Weights, prefix: str) -> Tensor:
        return ag.add(ag.matmul(h, w[f"{prefix}.w"]), w[f"{prefix}.b"])

    def _mlp(self, h: Tensor, w: Weights, prefix: str, n_hidden: int) -> Tensor:
        for i in range(n_hidden):
            h = self._act(self._dense(h, w, f"{prefix}l{i}"))
        return self._dense(h, w, f"{prefix}out")

    def visual_features(self, batch: StateBatch, w: Weights) -> Tensor:
        """(B, d_e) features of s_v, with image contexts stacked on as extra channels"""
        self._check_batch(batch)
        x = batch.visual
        if self.context_kind == ContextKind.IMAGE_MASK:
            x = np.concatenate([x, batch.context_image], axis=-1)
        if self.config.encoder_mode == "conv-tiny":
            h = self._act(ag.conv2d(x, w["encoder.conv1.w"], w["encoder.conv1.b"]))
            h = self._act(ag.conv2d(h, w["encoder.conv2.w"], w["encoder.conv2.b"]))
            h = ag.reshape(h, (batch.size, -1))
        else:
            h = Tensor(x.reshape(batch.size, -1))
        return self._act(self._dense(h, w, "encoder.visual"))

    def conditioning(
        self,
        actions: np.ndarray,
        proprio: np.ndarray,
        task_index: Optional[np.ndarray],
        w: Weights,
    ) -> Tensor:
        """Linear projection of (a, s_p[, task embedding]) to d_e"""
        actions = np.asarray(actions, dtype=np.float64)
        if actions.ndim != 2 or actions.shape[1] != ACTION_DIM:
            raise ConfigurationError(f"actions must be (B, {ACTION_DIM}), got {actions.shape}")
        parts: List[ArrayOrTensor] = [actions, proprio]
        if self.context_kind == ContextKind.EMBEDDING:
            if task_index is None:
                raise ConfigurationError("embedding contexts need task indices")
            if np.any(task_index < 0) or np.any(task_index >= self.n_tasks):
                raise ConfigurationError("task index outside the embedding table")
            parts.append(ag.take_rows(w["encoder.task_table"], task_index))
        return self._dense(ag.concat(parts, axis=1), w, "encoder.cond")

    def encode_state(self, batch: StateBatch, actions: np.ndarray, w: Weights) -> Tensor:
        """(B, d_e) embedding = visual features + conditioning"""
        if np.asarray(actions).shape[0] != batch.size:
            raise ConfigurationError("actions and states must have the same batch size")
        visual = self.visual_features(batch, w)
        return ag.add(visual, self.conditioning(actions, batch.proprio, batch.task_index, w))

    def q_logits(self, embedding: ArrayOrTensor, w: Weights) -> Tensor:
        h = ag.layer_norm(ag.as_tensor(embedding))
        out = self._mlp(h, w, Q_PREFIX, len(self.config.q_hidden))
        return ag.reshape(out, (-1,))

    def q_value(self, embedding: ArrayOrTensor, w: Weights) -> Tensor:
        """(B,) values clamped to [ε, 1 - ε]"""
        return ag.clip(ag.sigmoid(self.q_logits(embedding, w)), Q_EPS, 1.0 - Q_EPS)

    def _require_heads(self) -> None:
        if not self.has_pi_heads:
            raise UsageError("network was built without the auxiliary heads")

    def forward_head(self, embedding: ArrayOrTensor, w: Weights) -> Tensor:
        """μe(x): (B, z) unit vectors"""
        self._require_heads()
        h = ag.layer_norm(ag.as_tensor(embedding))
        return ag.l2_normalize(self._mlp(h, w, PI_FORWARD_PREFIX, self.config.pi_layers))

    def backward_head(self, embedding: ArrayOrTensor, rewards: np.ndarray, w: Weights) -> Tensor:
        """μb(y): (B, z) unit vectors from the future embedding and reward"""
        self._require_heads()
        h = ag.concat([ag.layer_norm(ag.as_tensor(embedding)), np.asarray(rewards, dtype=np.float64).reshape(-1, 1)], axis=1)
        return ag.l2_normalize(self._mlp(h, w, PI_BACKWARD_PREFIX, self.config.pi_layers))

    # ------------------------------------------------------------------ inference

    def q_function(self, params: ParameterSet, batch: StateBatch) -> Callable[[np.ndarray], np.ndarray]:
        """
        Batched critic for action search: visual features are computed once and
        reused for every candidate action.

        Returns:
            score(actions (B, N, A)) -> (B, N) Q values
        """
        w = params.bind(trainable=False)
        visual = self.visual_features(batch, w).data

        def score(actions: np.ndarray) -> np.ndarray:
            b, n, a = actions.shape
            if b != batch.size:
                raise ConfigurationError("candidate actions do not match the state batch")
            task_index = None if batch.task_index is None else np.repeat(batch.task_index, n)
            cond = self.conditioning(
                actions.reshape(b * n, a), np.repeat(batch.proprio, n, axis=0), task_index, w
            ).data
            embedding = np.repeat(visual, n, axis=0) + cond
            return self.q_value(embedding, w).data.reshape(b, n)

        return score

    def q_values(self, params: ParameterSet, batch: StateBatch, actions: np.ndarray) -> np.ndarray:
        """(B,) Q(s_i, a_i)"""
        w = params.bind(trainable=False)
        return self.q_value(self.encode_state(batch, actions, w), w).data
