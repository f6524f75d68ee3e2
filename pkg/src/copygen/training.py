"""Cross-entropy training of the copy/generation mixture.

Backpropagation is closed-form (the model is two affine maps, a tanh, two
softmaxes and a convex mixture), so there is no autodiff dependency; the
analytic gradients are checked against central finite differences in the
test suite. Parameters are float32 by default; probabilities and gradient
deltas are computed in float64 before being accumulated at parameter
precision.
"""

from __future__ import annotations

import dataclasses
import time
from typing import Callable

import numpy as np

from .data import as_quads, group_snapshots
from .history import HistVocab, masks_for
from .model import (
    ModelParams,
    copy_index_batch,
    generation_logits_batch,
    query_inputs,
    stable_softmax,
)

LOSS_FLOOR = 1e-30  # guards log() against truth-probability underflow


class GradientError(RuntimeError):
    """A gradient buffer picked up non-finite entries."""


@dataclasses.dataclass
class TrainConfig:
    alpha: float = 0.8
    dim: int = 200
    learning_rate: float = 0.001
    batch_size: int = 1024
    epochs: int = 30
    seed: int = 0
    mask_magnitude: float = 100.0
    mean_loss: bool = False  # reduction over a batch; sum is the definition
    patience: int | None = None  # stop after this many epochs without improvement
    dtype: type = np.float32

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        for name in ("dim", "learning_rate", "batch_size", "epochs", "mask_magnitude"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.patience is not None and self.patience <= 0:
            raise ValueError("patience must be positive when set")


def xavier_init(shape, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    """Uniform on [-b, b] with b = sqrt(6 / (fan_in + fan_out)).

    For a 2-D shape the fans are the two axes; a 1-D shape (n,) is treated
    as a single row (fans 1 and n).
    """
    if len(shape) == 1:
        fan_in, fan_out = 1, shape[0]
    elif len(shape) == 2:
        fan_in, fan_out = shape
    else:
        raise ValueError(f"expected a 1-D or 2-D shape, got {shape}")
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def init_params(num_entities: int, num_relations_aug: int, num_snapshots: int,
                config: TrainConfig, rng: np.random.Generator) -> ModelParams:
    """Xavier-initialized weights and embeddings; affine biases start at zero."""
    d = config.dim
    dt = config.dtype
    return ModelParams(
        entity_emb=xavier_init((num_entities, d), rng, dt),
        relation_emb=xavier_init((num_relations_aug, d), rng, dt),
        time_unit=xavier_init((d,), rng, dt),
        w_copy=xavier_init((num_entities, 3 * d), rng, dt),
        b_copy=np.zeros(num_entities, dtype=dt),
        w_gen=xavier_init((num_entities, 3 * d), rng, dt),
        b_gen=np.zeros(num_entities, dtype=dt),
        num_snapshots=num_snapshots,
        mask_magnitude=config.mask_magnitude,
        alpha=config.alpha,
    )


@dataclasses.dataclass
class Gradients:
    """One buffer per learnable tensor; rows untouched by the batch stay zero."""

    entity_emb: np.ndarray
    relation_emb: np.ndarray
    time_unit: np.ndarray
    w_copy: np.ndarray
    b_copy: np.ndarray
    w_gen: np.ndarray
    b_gen: np.ndarray

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in
                ("entity_emb", "relation_emb", "time_unit",
                 "w_copy", "b_copy", "w_gen", "b_gen")}


def _loss_and_grads(params: ModelParams, batch, vocab: HistVocab, alpha: float,
                    *, reduction: str = "sum", need_grads: bool = True):
    """Shared forward/backward pass over a batch of (s, p, truth, k) rows."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if reduction not in ("sum", "mean"):
        raise ValueError(f"unknown reduction {reduction!r}")
    q = as_quads(batch)
    if len(q) == 0:
        raise ValueError("batch is empty")
    subjects, relations, truths, steps = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    n = params.num_entities
    d = params.dim
    m = len(q)
    rows = np.arange(m)

    inputs = query_inputs(params, subjects, relations, steps)  # (m, 3d)
    masks = masks_for(vocab, subjects, relations, n, params.mask_magnitude)
    index = copy_index_batch(params, inputs)  # tanh output, (m, N)
    pc = stable_softmax(index.astype(np.float64) + masks)
    pg = stable_softmax(generation_logits_batch(params, inputs).astype(np.float64))

    truth_prob = alpha * pc[rows, truths] + (1.0 - alpha) * pg[rows, truths]
    floored = np.maximum(truth_prob, LOSS_FLOOR)
    losses = -np.log(floored)
    loss = float(losses.mean() if reduction == "mean" else losses.sum())
    if not need_grads:
        return loss, None

    # d(loss)/d(copy logits): -(alpha / P) * a_y * (onehot - a); same shape for
    # the generation logits with the (1 - alpha) weight. The mask is constant.
    coef_c = -(alpha * pc[rows, truths] / floored)
    coef_g = -((1.0 - alpha) * pg[rows, truths] / floored)
    d_copy = coef_c[:, None] * -pc
    d_copy[rows, truths] += coef_c
    d_gen = coef_g[:, None] * -pg
    d_gen[rows, truths] += coef_g
    # through the tanh of the copy index
    d_copy *= 1.0 - index.astype(np.float64) ** 2
    if reduction == "mean":
        d_copy /= m
        d_gen /= m

    inputs64 = inputs.astype(np.float64)
    dt = params.entity_emb.dtype
    grads = Gradients(
        entity_emb=np.zeros((n, d), dtype=dt),
        relation_emb=np.zeros((params.num_relations, d), dtype=dt),
        time_unit=np.zeros(d, dtype=dt),
        w_copy=(d_copy.T @ inputs64).astype(dt),
        b_copy=d_copy.sum(axis=0).astype(dt),
        w_gen=(d_gen.T @ inputs64).astype(dt),
        b_gen=d_gen.sum(axis=0).astype(dt),
    )
    d_inputs = d_copy @ params.w_copy.astype(np.float64) \
        + d_gen @ params.w_gen.astype(np.float64)  # (m, 3d)
    np.add.at(grads.entity_emb, subjects, d_inputs[:, :d].astype(dt))
    np.add.at(grads.relation_emb, relations, d_inputs[:, d:2 * d].astype(dt))
    grads.time_unit += ((steps + 1)[:, None] * d_inputs[:, 2 * d:]).sum(axis=0).astype(dt)

    for name, g in grads.tensors().items():
        if not np.isfinite(g).all():
            raise GradientError(f"non-finite gradient in {name}")
    return loss, grads


def batch_loss(params: ModelParams, batch, vocab: HistVocab, alpha: float,
               *, reduction: str = "sum") -> float:
    """Cross-entropy of the mixture: -sum(ln p(truth)) over the batch."""
    loss, _ = _loss_and_grads(params, batch, vocab, alpha,
                              reduction=reduction, need_grads=False)
    return loss


def batch_gradients(params: ModelParams, batch, vocab: HistVocab, alpha: float,
                    *, reduction: str = "sum") -> Gradients:
    """Analytic gradients of :func:`batch_loss` for every learnable tensor."""
    _, grads = _loss_and_grads(params, batch, vocab, alpha, reduction=reduction)
    return grads


class AmsGrad:
    """AMSGrad as published: keeps the running max of the second moment and
    applies no bias correction."""

    def __init__(self, params: ModelParams, lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {k: np.zeros_like(v) for k, v in params.tensors().items()}
        self._v = {k: np.zeros_like(v) for k, v in params.tensors().items()}
        self._vhat = {k: np.zeros_like(v) for k, v in params.tensors().items()}

    def step(self, params: ModelParams, grads: Gradients) -> None:
        self.step_count += 1
        tensors = params.tensors()
        for name, g in grads.tensors().items():
            theta = tensors[name]
            m, v, vhat = self._m[name], self._v[name], self._vhat[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            np.maximum(vhat, v, out=vhat)
            theta -= self.lr * m / (np.sqrt(vhat) + self.eps)


@dataclasses.dataclass
class EpochStats:
    epoch: int
    loss: float
    seconds: float
    steps: int
    snapshot_losses: list[float]


@dataclasses.dataclass
class TrainLog:
    epochs: list[EpochStats] = dataclasses.field(default_factory=list)

    @property
    def losses(self) -> list[float]:
        return [e.loss for e in self.epochs]


def fit(train_quads, num_entities: int, num_relations_aug: int, num_snapshots: int,
        config: TrainConfig,
        progress: Callable[[EpochStats], None] | None = None
        ) -> tuple[ModelParams, TrainLog]:
    """Train on the snapshot sequence of ``train_quads``.

    Each epoch walks snapshots in ascending order: a snapshot's facts are
    batched (shuffled by the seeded generator) and stepped against the
    vocabulary of strictly earlier snapshots, then the snapshot is absorbed,
    so no fact ever sees itself or its contemporaries as candidates. The
    vocabulary is rebuilt from scratch every epoch. Loss per epoch is the
    summed cross-entropy over all training facts.
    """
    rng = np.random.default_rng(config.seed)
    params = init_params(num_entities, num_relations_aug, num_snapshots, config, rng)
    optimizer = AmsGrad(params, lr=config.learning_rate)
    sequence = group_snapshots(as_quads(train_quads))
    reduction = "mean" if config.mean_loss else "sum"
    log = TrainLog()
    best = np.inf
    stale = 0

    for epoch in range(config.epochs):
        started = time.perf_counter()
        vocab = HistVocab()
        epoch_loss = 0.0
        steps = 0
        snapshot_losses = []
        for k, facts in enumerate(sequence):
            snap_loss = 0.0
            if len(facts):
                shuffled = facts[rng.permutation(len(facts))]
                times = np.full(len(facts), k, dtype=np.int64)
                for start in range(0, len(facts), config.batch_size):
                    stop = start + config.batch_size
                    batch = np.column_stack([shuffled[start:stop], times[start:stop]])
                    loss, grads = _loss_and_grads(params, batch, vocab, config.alpha,
                                                  reduction=reduction)
                    optimizer.step(params, grads)
                    snap_loss += loss
                    steps += 1
            vocab.absorb_snapshot(facts, index=k)
            snapshot_losses.append(snap_loss)
            epoch_loss += snap_loss
        stats = EpochStats(epoch, epoch_loss, time.perf_counter() - started,
                           steps, snapshot_losses)
        log.epochs.append(stats)
        if progress is not None:
            progress(stats)
        if config.patience is not None:
            if epoch_loss < best - 1e-12:
                best = epoch_loss
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    return params, log
