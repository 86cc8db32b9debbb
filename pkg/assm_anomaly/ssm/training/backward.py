"""
Reverse-mode gradients of the total loss through the gated recurrence, and the
central-difference oracle used to verify them.
"""
from __future__ import annotations
import numpy as np
from orm_loader.helpers import get_logger

from ...errors import ASSMValidationError, NumericDivergenceError
from ..base import Activation, Distance
from ..model import Parameters, Gradients, HiddenState
from .loss import ForwardCache, forward_batch, total_loss
from .sequences import LabeledSequence

logger = get_logger(__name__)


def backward_batch(params: Parameters, cache: ForwardCache, alpha: float, bptt_window: int) -> Gradients:
    """
    Gradients summed over every sequence in the cached batch.

    The gradient of the ReLU at exactly zero is taken as zero. The sequence is
    cut into consecutive windows of ``bptt_window`` steps: hidden state flows
    across a boundary in the forward pass, gradient does not flow back across it.
    """
    if bptt_window < 1:
        raise ASSMValidationError(f"bptt_window must be positive, got {bptt_window}")
    A, C, D, W_f = params.A, params.C, params.D, params.W_f
    gamma, w_s = params.gamma, params.w_s
    xs, hs, pre, act = cache.xs, cache.hs, cache.pre, cache.act
    B, T, _ = xs.shape

    # score / classification head
    sig = 0.5 * (1.0 + np.tanh(0.5 * cache.logits))
    d_logits = alpha * (sig - cache.ys)
    d_w_s = float(np.sum(d_logits * cache.scores))
    d_b_s = float(np.sum(d_logits))
    d_scores = d_logits * w_s

    d_resid = 2.0 * cache.resid * cache.recon_mask[..., None]
    if params.config.distance is Distance.SQUARED_L2:
        d_resid += 2.0 * d_scores[..., None] * cache.resid
    else:
        safe = np.where(cache.scores > 0.0, cache.scores, 1.0)
        coeff = np.where(cache.scores > 0.0, d_scores / safe, 0.0)
        d_resid += coeff[..., None] * cache.resid

    d_x_hat = -d_resid
    d_W_f = np.einsum("btm,btd->md", d_x_hat, hs[:, 1:])
    d_b_f = d_x_hat.sum(axis=(0, 1))
    d_h_out = d_x_hat @ W_f

    d_A = np.zeros_like(A)
    d_B = np.zeros_like(params.B)
    d_C = np.zeros_like(C)
    d_D = np.zeros_like(D)
    d_E = np.zeros_like(params.E)
    d_gamma = 0.0
    tanh = params.config.activation is Activation.TANH

    carry = np.zeros((B, params.state_dim))
    for t in range(T - 1, -1, -1):
        d_h = d_h_out[:, t] + carry
        h_prev = hs[:, t]
        d_A += d_h.T @ h_prev
        d_B += d_h.T @ xs[:, t]
        d_C += d_h.T @ act[:, t]

        d_act = d_h @ C
        d_gate = d_act * (1.0 - act[:, t] ** 2) if tanh else d_act
        active = pre[:, t] > 0.0
        d_gamma += float(np.sum(d_gate * np.where(active, pre[:, t], 0.0)))
        d_pre = d_gate * gamma * active
        d_D += d_pre.T @ h_prev
        d_E += d_pre.T @ cache.x_prev[:, t]

        if t % bptt_window == 0:
            carry = np.zeros_like(carry)
        else:
            carry = d_h @ A + d_pre @ D

    grads = Gradients(
        A=d_A, B=d_B, C=d_C, D=d_D, E=d_E,
        gamma=d_gamma,
        W_f=d_W_f, b_f=d_b_f,
        w_s=d_w_s, b_s=d_b_s,
    )
    if not grads.all_finite():
        raise NumericDivergenceError("non-finite gradient: recurrence is exploding")
    return grads


def backward(
    params: Parameters,
    seq: LabeledSequence,
    alpha: float,
    bptt_window: int,
    *,
    mask_anomalous_recon: bool = False,
    initial_state: HiddenState | None = None,
) -> Gradients:
    """Exact gradient of ``total_loss`` for one sequence."""
    cache = forward_batch(
        params,
        seq.xs[None],
        seq.ys[None].astype(np.float64),
        alpha,
        mask_anomalous_recon=mask_anomalous_recon,
        initial_state=initial_state,
    )
    return backward_batch(params, cache, alpha, bptt_window)


def finite_difference_gradient(
    params: Parameters,
    seq: LabeledSequence,
    alpha: float,
    epsilon: float,
    *,
    mask_anomalous_recon: bool = False,
    initial_state: HiddenState | None = None,
) -> Gradients:
    """
    *finite_difference_gradient*

    Central differences ``(L(theta + eps) - L(theta - eps)) / 2 eps`` for every
    scalar parameter.

    Costs two loss evaluations per parameter entry; meant as a verification
    oracle for small models (d * m up to roughly 50).
    """
    if epsilon <= 0:
        raise ASSMValidationError(f"epsilon must be positive, got {epsilon}")
    base = params.to_vector()
    grad = np.empty_like(base)
    logger.debug("Finite differences over %d parameters", base.size)

    def loss_at(flat: np.ndarray) -> float:
        return total_loss(
            params.from_vector(flat),
            seq,
            alpha,
            mask_anomalous_recon=mask_anomalous_recon,
            initial_state=initial_state,
        ).total

    probe = base.copy()
    for i in range(base.size):
        probe[i] = base[i] + epsilon
        up = loss_at(probe)
        probe[i] = base[i] - epsilon
        down = loss_at(probe)
        probe[i] = base[i]
        grad[i] = (up - down) / (2.0 * epsilon)

    zeros = Gradients.zeros_like(params)
    return zeros.from_vector(grad)
