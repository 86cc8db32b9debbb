"""
Forward computation of the adaptive gated state-space model.

    G_{t-1} = gamma * ReLU(D h_{t-1} + E x_{t-1})
    h_t     = A h_{t-1} + B x_t + C sigma(G_{t-1})
    x_hat_t = W_f h_t + b_f
    s_t     = dist(x_t, x_hat_t)

The public operations validate their inputs and allocate their results. The
``_*_into`` kernels underneath do no validation and write into a preallocated
``StepWorkspace``; ``step``, ``fold_sequence``, ``score_sequence`` and the stream
engine all run through the same kernels, so batch and streaming scores agree
bit for bit.
"""
from __future__ import annotations
import math
from dataclasses import dataclass
import numpy as np

from ...errors import ShapeError
from ..base import (
    Activation,
    Distance,
    Vector,
    ArrayLike,
    as_vector,
    as_sequence,
    require_finite,
)
from .parameters import Parameters


@dataclass(frozen=True)
class HiddenState:
    """
    Recurrent state carried between steps: ``h_{t-1}``, ``x_{t-1}`` and the
    number of observations consumed so far.
    """
    h: Vector
    x_prev: Vector
    t: int = 0

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"step counter must be nonnegative, got {self.t}")


@dataclass(frozen=True)
class StepOutput:
    h: Vector
    gate: Vector
    x_hat: Vector
    score: float


@dataclass(slots=True)
class StepWorkspace:
    """Scratch buffers for one step; owned by a single caller."""
    pre: Vector
    gate: Vector
    act: Vector
    h: Vector
    tmp: Vector
    x_hat: Vector
    resid: Vector

    @classmethod
    def allocate(cls, m: int, d: int) -> StepWorkspace:
        return cls(
            pre=np.zeros(d),
            gate=np.zeros(d),
            act=np.zeros(d),
            h=np.zeros(d),
            tmp=np.zeros(d),
            x_hat=np.zeros(m),
            resid=np.zeros(m),
        )

    @property
    def nbytes(self) -> int:
        return sum(getattr(self, name).nbytes for name in self.__slots__)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def zero_state(params: Parameters) -> HiddenState:
    """h_0 = 0 and x_0 = 0."""
    return HiddenState(
        h=_readonly(np.zeros(params.state_dim)),
        x_prev=_readonly(np.zeros(params.input_dim)),
        t=0,
    )


def _activate(values: Vector, activation: Activation, out: Vector) -> Vector:
    if activation is Activation.TANH:
        return np.tanh(values, out=out)
    np.copyto(out, values)
    return out


# ---- kernels ---------------------------------------------------------------

def _gate_into(params: Parameters, h_prev: Vector, x_prev: Vector, ws: StepWorkspace) -> None:
    np.dot(params.D, h_prev, out=ws.pre)
    np.dot(params.E, x_prev, out=ws.tmp)
    ws.pre += ws.tmp
    np.maximum(ws.pre, 0.0, out=ws.gate)
    ws.gate *= params.gamma


def _update_into(params: Parameters, h_prev: Vector, x_t: Vector, ws: StepWorkspace) -> None:
    _activate(ws.gate, params.config.activation, ws.act)
    np.dot(params.A, h_prev, out=ws.h)
    np.dot(params.B, x_t, out=ws.tmp)
    ws.h += ws.tmp
    np.dot(params.C, ws.act, out=ws.tmp)
    ws.h += ws.tmp


def _project_into(params: Parameters, ws: StepWorkspace) -> None:
    np.dot(params.W_f, ws.h, out=ws.x_hat)
    ws.x_hat += params.b_f


def _distance_into(x_t: Vector, ws: StepWorkspace, distance: Distance) -> float:
    np.subtract(x_t, ws.x_hat, out=ws.resid)
    sq = float(np.dot(ws.resid, ws.resid))
    if distance is Distance.SQUARED_L2:
        return sq
    return math.sqrt(sq)


def step_into(
    params: Parameters,
    h_prev: Vector,
    x_prev: Vector,
    x_t: Vector,
    ws: StepWorkspace,
) -> float:
    """
    One unchecked step: gate, state update, projection, distance.

    Results land in ``ws`` (``ws.h`` is h_t). ``h_prev`` must not alias any
    workspace buffer.
    """
    _gate_into(params, h_prev, x_prev, ws)
    _update_into(params, h_prev, x_t, ws)
    _project_into(params, ws)
    return _distance_into(x_t, ws, params.config.distance)


# ---- public operations -----------------------------------------------------

def compute_gate(params: Parameters, h_prev: ArrayLike, x_prev: ArrayLike) -> Vector:
    """gamma * ReLU(D h_prev + E x_prev)."""
    h = as_vector(h_prev, params.state_dim, name="h_prev")
    x = as_vector(x_prev, params.input_dim, name="x_prev")
    return params.gamma * np.maximum(params.D @ h + params.E @ x, 0.0)


def state_update(
    params: Parameters,
    h_prev: ArrayLike,
    x_t: ArrayLike,
    gate: ArrayLike,
) -> Vector:
    """A h_prev + B x_t + C sigma(gate)."""
    h = as_vector(h_prev, params.state_dim, name="h_prev")
    x = as_vector(x_t, params.input_dim, name="x_t")
    g = as_vector(gate, params.state_dim, name="gate")
    for arr, name in ((h, "h_prev"), (x, "x_t"), (g, "gate")):
        require_finite(arr, name=name)
    act = _activate(g, params.config.activation, np.empty_like(g))
    return params.A @ h + params.B @ x + params.C @ act


def project(params: Parameters, h: ArrayLike) -> Vector:
    """W_f h + b_f."""
    hv = as_vector(h, params.state_dim, name="h")
    return params.W_f @ hv + params.b_f


def anomaly_score(x_t: ArrayLike, x_hat: ArrayLike, distance: Distance | str) -> float:
    """Distance between an observation and its reconstruction."""
    x = np.asarray(x_t, dtype=np.float64)
    xh = np.asarray(x_hat, dtype=np.float64)
    if x.ndim != 1 or x.shape != xh.shape:
        raise ShapeError(f"x_t {x.shape} and x_hat {xh.shape} must be equal-length vectors")
    resid = x - xh
    sq = float(np.dot(resid, resid))
    if Distance(distance) is Distance.SQUARED_L2:
        return sq
    return math.sqrt(sq)


def _check_state(params: Parameters, state: HiddenState) -> None:
    as_vector(state.h, params.state_dim, name="state.h")
    as_vector(state.x_prev, params.input_dim, name="state.x_prev")


def step(params: Parameters, state: HiddenState, x_t: ArrayLike) -> tuple[HiddenState, StepOutput]:
    """
    Advance one observation. Pure: the returned state and output are fresh
    read-only arrays and nothing outside ``state`` is consulted.
    """
    _check_state(params, state)
    x = as_vector(x_t, params.input_dim, name="x_t")
    require_finite(x, name="x_t")
    h_prev = np.ascontiguousarray(state.h, dtype=np.float64)
    x_prev = np.ascontiguousarray(state.x_prev, dtype=np.float64)
    x = np.ascontiguousarray(x)

    ws = StepWorkspace.allocate(params.input_dim, params.state_dim)
    score = step_into(params, h_prev, x_prev, x, ws)

    h_t = _readonly(ws.h)
    new_state = HiddenState(h=h_t, x_prev=_readonly(x.copy()), t=state.t + 1)
    out = StepOutput(h=h_t, gate=_readonly(ws.gate), x_hat=_readonly(ws.x_hat), score=score)
    return new_state, out


def fold_sequence(
    params: Parameters,
    state: HiddenState,
    xs: ArrayLike,
) -> tuple[HiddenState, list[StepOutput]]:
    """
    Fold ``step`` over ``xs`` starting from ``state``; returns the final state
    alongside the per-step outputs so a sequence can be continued later.
    """
    _check_state(params, state)
    arr = np.ascontiguousarray(as_sequence(xs, m=params.input_dim))
    require_finite(arr, name="xs")

    ws = StepWorkspace.allocate(params.input_dim, params.state_dim)
    h_prev = np.array(state.h, dtype=np.float64)
    x_prev = np.array(state.x_prev, dtype=np.float64)
    outputs: list[StepOutput] = []
    for x_t in arr:
        score = step_into(params, h_prev, x_prev, x_t, ws)
        h_prev = _readonly(ws.h.copy())
        outputs.append(
            StepOutput(
                h=h_prev,
                gate=_readonly(ws.gate.copy()),
                x_hat=_readonly(ws.x_hat.copy()),
                score=score,
            )
        )
        x_prev = x_t
    final = HiddenState(h=h_prev, x_prev=_readonly(arr[-1].copy()), t=state.t + arr.shape[0])
    return final, outputs


def run_sequence(params: Parameters, xs: ArrayLike) -> list[StepOutput]:
    """Fold ``step`` over ``xs`` from the zero state."""
    _, outputs = fold_sequence(params, zero_state(params), xs)
    return outputs


def score_sequence(params: Parameters, xs: ArrayLike) -> Vector:
    """
    Scores only, from the zero state. Same kernels as ``run_sequence`` so the
    values are identical; skips the per-step output objects.
    """
    arr = np.ascontiguousarray(as_sequence(xs, m=params.input_dim))
    require_finite(arr, name="xs")
    ws = StepWorkspace.allocate(params.input_dim, params.state_dim)
    h_prev = np.zeros(params.state_dim)
    x_prev = np.zeros(params.input_dim)
    scores = np.empty(arr.shape[0])
    for t, x_t in enumerate(arr):
        scores[t] = step_into(params, h_prev, x_prev, x_t, ws)
        np.copyto(h_prev, ws.h)
        x_prev = x_t
    return scores

