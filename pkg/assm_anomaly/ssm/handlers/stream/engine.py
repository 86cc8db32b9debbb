"""
Per-sample online inference: ingest, state update, score, verdict, and an
optional supervised gradient step over the most recent labelled window.
"""
from __future__ import annotations
from dataclasses import dataclass, asdict
from typing import Any, Mapping
import numpy as np
from orm_loader.helpers import get_logger

from ....config import check_known_keys
from ....errors import ConfigError, LabelError, NonFiniteInputError, ShapeError
from ....evaluation.throughput import ThroughputResult, measure_throughput
from ...base import ArrayLike, DefaultHyperparameters as H
from ...model import HiddenState, ModelConfig, Parameters, StepWorkspace, init_parameters, step_into
from ...training import LabeledSequence, gradient_step
from .ring_buffer import RingBuffer

logger = get_logger(__name__)


@dataclass(frozen=True)
class StreamConfig:
    """
    *StreamConfig*

    Parameters
    ----------
    threshold : float
        Alarm cutoff; a step is anomalous when its score exceeds it.
    online_update : bool
        Take a gradient step over recent labelled samples every
        ``update_period`` samples.
    update_period : int
        Samples between online updates.
    window_capacity : int
        Ring buffer size. Must be at least ``bptt_window`` when updating online.
    learning_rate, alpha, bptt_window, grad_clip
        Settings for the online gradient step.
    """
    threshold: float = 0.0
    online_update: bool = False
    update_period: int = 100
    window_capacity: int = H.BPTT_WINDOW
    learning_rate: float = H.LEARNING_RATE
    alpha: float = H.ALPHA
    bptt_window: int = H.BPTT_WINDOW
    grad_clip: float = H.GRAD_CLIP

    def __post_init__(self) -> None:
        if self.threshold != self.threshold:
            raise ConfigError("threshold must not be NaN")
        for name in ("update_period", "window_capacity", "bptt_window"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.learning_rate < 0 or self.alpha < 0:
            raise ConfigError("learning_rate and alpha must be nonnegative")
        if self.grad_clip <= 0:
            raise ConfigError(f"grad_clip must be positive, got {self.grad_clip}")
        if self.online_update and self.window_capacity < self.bptt_window:
            raise ConfigError(
                f"window_capacity ({self.window_capacity}) must be at least "
                f"bptt_window ({self.bptt_window}) when online_update is on"
            )

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> StreamConfig:
        check_known_keys("stream", values, set(cls.__dataclass_fields__))
        return cls(**values)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, slots=True)
class Verdict:
    score: float
    is_anomaly: bool
    t: int

    def to_dict(self) -> dict[str, Any]:
        return {"t": self.t, "score": self.score, "is_anomaly": self.is_anomaly}


class StreamHandle:
    """
    Live inference state of one stream.

    A handle is single-owner. It reads the Parameters it was opened with and
    replaces its own reference after an online update; the shared instance is
    never mutated. Every buffer is allocated at open, so resident size does not
    grow with stream length. The replay window is only filled while
    ``online_update`` is on.
    """

    def __init__(self, params: Parameters, config: StreamConfig):
        self.params = params
        self.config = config
        m, d = params.input_dim, params.state_dim
        self._h = np.zeros(d)
        self._x_prev = np.zeros(m)
        self._ws = StepWorkspace.allocate(m, d)
        self._finite = np.zeros(m, dtype=bool)
        self.buffer = RingBuffer(config.window_capacity, m, d)
        self.samples_seen = 0
        self.alarms_raised = 0
        self.updates_applied = 0
        self.rejected_samples = 0

    @property
    def state(self) -> HiddenState:
        """Snapshot of the recurrent state."""
        return HiddenState(h=self._h.copy(), x_prev=self._x_prev.copy(), t=self.samples_seen)

    @property
    def nbytes(self) -> int:
        """Bytes held by handle-owned buffers (the shared Parameters excluded)."""
        return (
            self._h.nbytes
            + self._x_prev.nbytes
            + self._finite.nbytes
            + self._ws.nbytes
            + self.buffer.nbytes
        )

    def _coerce(self, x_t: ArrayLike) -> np.ndarray:
        x = np.asarray(x_t, dtype=np.float64)
        if x.shape != self._x_prev.shape:
            raise ShapeError(f"x_t must have shape {self._x_prev.shape}, got {x.shape}")
        np.isfinite(x, out=self._finite)
        if not self._finite.all():
            self.rejected_samples += 1
            raise NonFiniteInputError(f"non-finite sample rejected at t={self.samples_seen}")
        return x

    def push(self, x_t: ArrayLike, y_t: int | None = None) -> Verdict:
        """
        *push*

        Consume one observation and return its verdict.

        The fast path is a single gate, state update, projection and distance
        computed into preallocated buffers. With ``online_update`` on and a
        label supplied, every ``update_period``-th sample also triggers one
        truncated gradient step over the newest labelled run in the buffer.

        Rejected samples (wrong shape, non-finite values, bad label) leave the
        stream state and ``samples_seen`` untouched.
        """
        x = self._coerce(x_t)
        if y_t is not None and y_t not in (0, 1):
            raise LabelError(f"label must be 0, 1 or absent, got {y_t!r}")

        if self.config.online_update:
            self.buffer.append(x, y_t, self._h, self._x_prev)
        score = step_into(self.params, self._h, self._x_prev, x, self._ws)
        np.copyto(self._h, self._ws.h)
        np.copyto(self._x_prev, x)

        t = self.samples_seen
        self.samples_seen += 1
        is_anomaly = score > self.config.threshold
        if is_anomaly:
            self.alarms_raised += 1

        if (
            self.config.online_update
            and y_t is not None
            and self.samples_seen % self.config.update_period == 0
        ):
            self._online_update()
        return Verdict(score=score, is_anomaly=is_anomaly, t=t)

    def _online_update(self) -> None:
        cfg = self.config
        count = self.buffer.labelled_suffix(cfg.bptt_window)
        xs, ys, h_start, x_start = self.buffer.window(count)
        start = HiddenState(h=h_start, x_prev=x_start, t=self.samples_seen - count)
        self.params = gradient_step(
            self.params,
            LabeledSequence(xs=xs, ys=ys),
            alpha=cfg.alpha,
            learning_rate=cfg.learning_rate,
            bptt_window=cfg.bptt_window,
            grad_clip=cfg.grad_clip,
            initial_state=start,
        )
        self.updates_applied += 1
        logger.debug("Online update %d over %d samples at t=%d", self.updates_applied, count, self.samples_seen)

    def counters(self) -> dict[str, int]:
        return {
            "samples_seen": self.samples_seen,
            "alarms_raised": self.alarms_raised,
            "updates_applied": self.updates_applied,
            "rejected_samples": self.rejected_samples,
        }

    def __repr__(self) -> str:
        return f"<StreamHandle m={self.params.input_dim} d={self.params.state_dim} seen={self.samples_seen}>"


def open_stream(params: Parameters, config: StreamConfig) -> StreamHandle:
    """Fresh handle with zero state and an empty buffer."""
    return StreamHandle(params, config)


def push(handle: StreamHandle, x_t: ArrayLike, y_t: int | None = None) -> Verdict:
    return handle.push(x_t, y_t)


def bench(
    params: Parameters | None,
    n: int,
    d: int = 16,
    m: int = 1,
    *,
    config: StreamConfig | None = None,
    seed: int = 0,
) -> ThroughputResult:
    """
    Sustained single-stream ``push`` throughput on Gaussian input.

    Without ``params`` a model of the requested ``d`` and ``m`` is initialised
    from ``seed``; given ``params`` take precedence over ``d`` and ``m``.
    """
    if params is None:
        params = init_parameters(ModelConfig(input_dim=m, state_dim=d, seed=seed))
    handle = open_stream(params, config or StreamConfig())
    rng = np.random.default_rng(seed)
    xs = rng.standard_normal((n + n // 10, params.input_dim))
    logger.info("Benchmarking push: n=%d d=%d m=%d", n, params.state_dim, params.input_dim)

    def run(i: int) -> Verdict:
        return handle.push(xs[i])

    return measure_throughput(run, n)
