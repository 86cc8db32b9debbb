"""
Batched forward pass with the intermediates reverse-mode differentiation needs,
and the total loss

    L = sum_t ||x_t - f(h_t)||^2 + alpha * BCE(sigmoid(w_s * s_t + b_s), y_t)

Sequences in a batch share one length T; arrays are laid out (B, T, ...).
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import NamedTuple
import numpy as np

from ...errors import ASSMValidationError, NumericDivergenceError, ShapeError
from ..base import Activation, Distance, Matrix, Vector
from ..model import Parameters, HiddenState
from .sequences import LabeledSequence


class LossTerms(NamedTuple):
    total: float
    recon: float
    classification: float


@dataclass
class ForwardCache:
    xs: np.ndarray        # (B, T, m)
    ys: np.ndarray        # (B, T)
    x_prev: np.ndarray    # (B, T, m)  x_{t-1}
    hs: np.ndarray        # (B, T+1, d) h_0 .. h_T
    pre: np.ndarray       # (B, T, d)  D h_{t-1} + E x_{t-1}
    act: np.ndarray       # (B, T, d)  sigma(G_{t-1})
    resid: np.ndarray     # (B, T, m)  x_t - x_hat_t
    scores: np.ndarray    # (B, T)
    logits: np.ndarray    # (B, T)
    recon_mask: np.ndarray  # (B, T)
    recon: Vector         # (B,) per-sequence sums
    classification: Vector
    total: Vector


def _stack_initial(
    params: Parameters,
    batch: int,
    initial_state: HiddenState | None,
) -> tuple[Matrix, Matrix]:
    d, m = params.state_dim, params.input_dim
    if initial_state is None:
        return np.zeros((batch, d)), np.zeros((batch, m))
    h0 = np.asarray(initial_state.h, dtype=np.float64)
    x0 = np.asarray(initial_state.x_prev, dtype=np.float64)
    if h0.shape != (d,) or x0.shape != (m,):
        raise ShapeError("initial_state does not match parameter dimensions")
    return np.tile(h0, (batch, 1)), np.tile(x0, (batch, 1))


def forward_batch(
    params: Parameters,
    xs: np.ndarray,
    ys: np.ndarray,
    alpha: float,
    *,
    mask_anomalous_recon: bool = False,
    initial_state: HiddenState | None = None,
) -> ForwardCache:
    """
    Run the recurrence over a (B, T, m) batch and evaluate every loss term.

    Raises NumericDivergenceError when any intermediate is non-finite.
    """
    if xs.ndim != 3 or xs.shape[2] != params.input_dim:
        raise ShapeError(f"batch must be (B, T, {params.input_dim}), got {xs.shape}")
    B, T, _ = xs.shape
    d = params.state_dim
    A, Bm, C, D, E = params.A, params.B, params.C, params.D, params.E
    tanh = params.config.activation is Activation.TANH

    h0, x0 = _stack_initial(params, B, initial_state)
    x_prev = np.concatenate([x0[:, None, :], xs[:, :-1, :]], axis=1)

    hs = np.empty((B, T + 1, d))
    hs[:, 0] = h0
    pre = np.empty((B, T, d))
    act = np.empty((B, T, d))
    for t in range(T):
        h_prev = hs[:, t]
        pre[:, t] = h_prev @ D.T + x_prev[:, t] @ E.T
        gate = params.gamma * np.maximum(pre[:, t], 0.0)
        act[:, t] = np.tanh(gate) if tanh else gate
        hs[:, t + 1] = h_prev @ A.T + xs[:, t] @ Bm.T + act[:, t] @ C.T

    x_hat = hs[:, 1:] @ params.W_f.T + params.b_f
    resid = xs - x_hat
    sq = np.einsum("btm,btm->bt", resid, resid)
    scores = sq if params.config.distance is Distance.SQUARED_L2 else np.sqrt(sq)
    logits = params.w_s * scores + params.b_s

    recon_mask = (ys == 0).astype(np.float64) if mask_anomalous_recon else np.ones((B, T))
    recon = (sq * recon_mask).sum(axis=1)
    # BCE(sigmoid(z), y) = softplus(z) - y z
    classification = (np.logaddexp(0.0, logits) - ys * logits).sum(axis=1)
    total = recon + alpha * classification

    if not np.isfinite(total).all():
        raise NumericDivergenceError("non-finite loss in forward pass")

    return ForwardCache(
        xs=xs,
        ys=ys,
        x_prev=x_prev,
        hs=hs,
        pre=pre,
        act=act,
        resid=resid,
        scores=scores,
        logits=logits,
        recon_mask=recon_mask,
        recon=recon,
        classification=classification,
        total=total,
    )


def total_loss(
    params: Parameters,
    seq: LabeledSequence,
    alpha: float,
    *,
    mask_anomalous_recon: bool = False,
    initial_state: HiddenState | None = None,
) -> LossTerms:
    """
    ``(total, recon, classification)`` for one sequence, with
    ``total = recon + alpha * classification``.
    """
    if alpha < 0:
        raise ASSMValidationError(f"alpha must be nonnegative, got {alpha}")
    cache = forward_batch(
        params,
        seq.xs[None, :, :],
        seq.ys[None, :].astype(np.float64),
        alpha,
        mask_anomalous_recon=mask_anomalous_recon,
        initial_state=initial_state,
    )
    return LossTerms(float(cache.total[0]), float(cache.recon[0]), float(cache.classification[0]))


def relu_margin(params: Parameters, seq: LabeledSequence) -> float:
    """
    Smallest |D h_{t-1} + E x_{t-1}| over the sequence, from the zero state.
    Gradient checks near the ReLU kink are meaningless; callers use this to
    screen instances.

    The first step is skipped: from the zero state its pre-activation is
    identically zero for every parameter value, so it is not a kink. A
    length-1 sequence has margin +inf.
    """
    cache = forward_batch(params, seq.xs[None], seq.ys[None].astype(np.float64), 0.0)
    if seq.length < 2:
        return float("inf")
    return float(np.min(np.abs(cache.pre[:, 1:])))
