"""
Mini-batch gradient descent with global-norm clipping, and post-training
threshold calibration.
"""
from __future__ import annotations
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence
import numpy as np
from orm_loader.helpers import get_logger

from ...errors import ConfigError, EmptyInputError, NumericDivergenceError, ShapeError
from ..base import DefaultHyperparameters, Vector
from ..model import (
    Gradients,
    HiddenState,
    ModelConfig,
    Parameters,
    init_parameters,
    score_sequence,
)
from .backward import backward_batch
from .calibration import calibrate_threshold
from .config import TrainConfig
from .loss import LossTerms, forward_batch
from .sequences import LabeledSequence

logger = get_logger(__name__)


def clip_gradients(grads: Gradients, max_norm: float) -> Gradients:
    """Rescale so the global L2 norm is at most ``max_norm``."""
    if max_norm <= 0:
        raise ConfigError(f"max_norm must be positive, got {max_norm}")
    norm = grads.norm()
    if norm <= max_norm:
        return grads
    return grads.from_vector(grads.to_vector() * (max_norm / norm))


def apply_gradients(params: Parameters, grads: Gradients, learning_rate: float) -> Parameters:
    """One descent step ``theta - learning_rate * grad``; returns new Parameters."""
    if learning_rate == 0:
        return params
    updated = params.from_vector(params.to_vector() - learning_rate * grads.to_vector())
    if not updated.all_finite():
        raise NumericDivergenceError("parameter update produced non-finite values")
    return updated


@dataclass
class TrainReport:
    """
    *TrainReport*

    Per-epoch mean per-sequence losses, the threshold calibrated on the
    training split after the last epoch, and wall-clock seconds per epoch.
    """
    total_losses: list[float] = field(default_factory=list)
    recon_losses: list[float] = field(default_factory=list)
    class_losses: list[float] = field(default_factory=list)
    threshold: float = math.inf
    threshold_f1: float = 0.0
    epoch_seconds: list[float] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.total_losses)

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "epochs": self.epochs,
            "total_losses": list(self.total_losses),
            "recon_losses": list(self.recon_losses),
            "class_losses": list(self.class_losses),
            "threshold": self.threshold,
            "threshold_f1": self.threshold_f1,
        }
        if include_timing:
            out["epoch_seconds"] = list(self.epoch_seconds)
        return out

    def __eq__(self, other: object) -> bool:
        # wall-clock never takes part in equality
        if not isinstance(other, TrainReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class _ChunkResult:
    grad: Vector
    total: float
    recon: float
    classification: float


def _plan_chunks(batch: Sequence[LabeledSequence], chunk: int) -> list[list[LabeledSequence]]:
    """
    Group a batch by sequence length (first-seen order) and cut each group into
    chunks of at most ``chunk`` sequences. Depends only on the batch, never on
    the worker count.
    """
    groups: dict[int, list[LabeledSequence]] = {}
    for seq in batch:
        groups.setdefault(seq.length, []).append(seq)
    plan: list[list[LabeledSequence]] = []
    for members in groups.values():
        for start in range(0, len(members), chunk):
            plan.append(members[start:start + chunk])
    return plan


def _chunk_gradient(
    params: Parameters,
    chunk: list[LabeledSequence],
    tconfig: TrainConfig,
) -> _ChunkResult:
    xs = np.stack([s.xs for s in chunk])
    ys = np.stack([s.ys for s in chunk]).astype(np.float64)
    cache = forward_batch(
        params, xs, ys, tconfig.alpha,
        mask_anomalous_recon=tconfig.mask_anomalous_recon,
    )
    grads = backward_batch(params, cache, tconfig.alpha, tconfig.bptt_window)
    return _ChunkResult(
        grad=grads.to_vector(),
        total=float(cache.total.sum()),
        recon=float(cache.recon.sum()),
        classification=float(cache.classification.sum()),
    )


def batch_gradient(
    params: Parameters,
    batch: Sequence[LabeledSequence],
    tconfig: TrainConfig,
    executor: ThreadPoolExecutor | None = None,
) -> tuple[Gradients, LossTerms]:
    """
    Mean gradient and mean per-sequence loss terms over ``batch``.

    Chunks are evaluated on ``executor`` when given; partial sums are reduced
    in plan order so the result is the same for any number of workers.
    """
    plan = _plan_chunks(batch, DefaultHyperparameters.GRAD_CHUNK)
    if executor is None:
        results = [_chunk_gradient(params, c, tconfig) for c in plan]
    else:
        results = list(executor.map(lambda c: _chunk_gradient(params, c, tconfig), plan))

    grad = np.zeros(params.size)
    total = recon = classification = 0.0
    for r in results:
        grad += r.grad
        total += r.total
        recon += r.recon
        classification += r.classification
    n = len(batch)
    mean = Gradients.zeros_like(params).from_vector(grad / n)
    return mean, LossTerms(total / n, recon / n, classification / n)


def gradient_step(
    params: Parameters,
    seq: LabeledSequence,
    *,
    alpha: float,
    learning_rate: float,
    bptt_window: int,
    grad_clip: float,
    initial_state: HiddenState | None = None,
    mask_anomalous_recon: bool = False,
) -> Parameters:
    """
    One clipped descent step on a single sequence, optionally starting from a
    mid-stream state. Used for online adaptation.
    """
    cache = forward_batch(
        params,
        seq.xs[None],
        seq.ys[None].astype(np.float64),
        alpha,
        mask_anomalous_recon=mask_anomalous_recon,
        initial_state=initial_state,
    )
    grads = clip_gradients(backward_batch(params, cache, alpha, bptt_window), grad_clip)
    return apply_gradients(params, grads, learning_rate)


def _check_dataset(config: ModelConfig, dataset: Sequence[LabeledSequence]) -> None:
    if len(dataset) == 0:
        raise EmptyInputError("training needs at least one sequence")
    dims = {seq.input_dim for seq in dataset}
    if dims != {config.input_dim}:
        raise ShapeError(
            f"training sequences have input dims {sorted(dims)}, model expects {config.input_dim}"
        )


def calibrate_on(params: Parameters, dataset: Sequence[LabeledSequence]) -> tuple[float, float]:
    """Score every sequence from the zero state and calibrate the alarm threshold."""
    scores = np.concatenate([score_sequence(params, seq.xs) for seq in dataset])
    labels = np.concatenate([seq.ys for seq in dataset])
    if not labels.any():
        logger.warning("No anomalous steps in the calibration data; threshold left at +inf")
        return math.inf, 0.0
    return calibrate_threshold(scores, labels)


def train(
    config: ModelConfig,
    tconfig: TrainConfig,
    dataset: Sequence[LabeledSequence],
) -> tuple[Parameters, TrainReport]:
    """
    *train*

    Fit a freshly initialised model to ``dataset``.

    Each epoch shuffles the sequences with a generator seeded from
    ``tconfig.seed``, walks them in mini-batches, and applies one clipped
    gradient-descent step per batch. Reported epoch losses are the mean
    per-sequence losses measured before each update. After the last epoch the
    alarm threshold is calibrated on the training sequences.

    Raises
    ------
    NumericDivergenceError
        Any non-finite loss, gradient or parameter; carries the epoch index.
    """
    _check_dataset(config, dataset)
    params = init_parameters(config)
    rng = np.random.default_rng(tconfig.seed)
    report = TrainReport()
    n = len(dataset)
    logger.info(
        "Training on %d sequences: d=%d, epochs=%d, batch=%d, alpha=%g, lr=%g",
        n, config.state_dim, tconfig.epochs, tconfig.batch_size, tconfig.alpha, tconfig.learning_rate,
    )

    executor = ThreadPoolExecutor(max_workers=tconfig.workers) if tconfig.workers > 1 else None
    try:
        for epoch in range(tconfig.epochs):
            started = time.perf_counter()
            order = rng.permutation(n)
            sums = np.zeros(3)
            try:
                for start in range(0, n, tconfig.batch_size):
                    batch = [dataset[i] for i in order[start:start + tconfig.batch_size]]
                    grads, losses = batch_gradient(params, batch, tconfig, executor)
                    sums += np.asarray(losses) * len(batch)
                    params = apply_gradients(
                        params, clip_gradients(grads, tconfig.grad_clip), tconfig.learning_rate
                    )
            except NumericDivergenceError as exc:
                raise NumericDivergenceError(str(exc), epoch=epoch) from exc

            total, recon, classification = (float(v) for v in sums / n)
            report.total_losses.append(total)
            report.recon_losses.append(recon)
            report.class_losses.append(classification)
            report.epoch_seconds.append(time.perf_counter() - started)
            logger.info(
                "Epoch %d/%d: loss=%.6f recon=%.6f class=%.6f",
                epoch + 1, tconfig.epochs, total, recon, classification,
            )
    finally:
        if executor is not None:
            executor.shutdown()

    report.threshold, report.threshold_f1 = calibrate_on(params, dataset)
    logger.info("Calibrated threshold %.6g (train F1 %.4f)", report.threshold, report.threshold_f1)
    return params, report
