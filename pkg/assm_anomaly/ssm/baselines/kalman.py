"""
Linear Kalman filter baseline. The anomaly score of a step is the squared
Mahalanobis norm of the innovation, ``nu^T S^-1 nu``.
"""
from __future__ import annotations
from dataclasses import dataclass, asdict
from typing import Any, Mapping
import numpy as np
from scipy import linalg
from orm_loader.helpers import get_logger

from ...config import check_known_keys
from ...errors import ConfigError, KalmanDegenerateError, ShapeError
from ..base import ArrayLike, Matrix, Vector, as_matrix, as_sequence, as_vector, require_finite

logger = get_logger(__name__)

PSD_TOLERANCE = 1e-12


def _frozen(value: ArrayLike) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


def _check_psd(matrix: Matrix, name: str) -> None:
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=PSD_TOLERANCE):
        raise ConfigError(f"{name} must be symmetric")
    if matrix.size and float(np.min(linalg.eigvalsh(matrix))) < -PSD_TOLERANCE:
        raise ConfigError(f"{name} must be positive semidefinite")


@dataclass(frozen=True, eq=False)
class KfModel:
    """
    *KfModel*

    Linear-Gaussian state-space model ``z_t = F z_{t-1} + w``,
    ``x_t = H z_t + v`` with ``w ~ N(0, Q)``, ``v ~ N(0, R)``.

    Q and P0 must be symmetric positive semidefinite and R symmetric positive
    definite; violations are rejected at construction.
    """
    F: Matrix
    H: Matrix
    Q: Matrix
    R: Matrix
    x0: Vector
    P0: Matrix

    def __post_init__(self) -> None:
        F = np.asarray(self.F, dtype=np.float64)
        H = np.asarray(self.H, dtype=np.float64)
        if F.ndim != 2 or F.shape[0] != F.shape[1] or F.shape[0] < 1:
            raise ShapeError(f"F must be a non-empty square matrix, got shape {F.shape}")
        if H.ndim != 2 or H.shape[1] != F.shape[0] or H.shape[0] < 1:
            raise ShapeError(f"H must have shape (m, {F.shape[0]}), got {H.shape}")
        k, m = F.shape[0], H.shape[0]
        Q = as_matrix(self.Q, k, k, name="Q")
        R = as_matrix(self.R, m, m, name="R")
        P0 = as_matrix(self.P0, k, k, name="P0")
        x0 = as_vector(self.x0, k, name="x0")
        for arr, name in ((F, "F"), (H, "H"), (Q, "Q"), (R, "R"), (P0, "P0"), (x0, "x0")):
            require_finite(arr, name=name)
        _check_psd(Q, "Q")
        _check_psd(P0, "P0")
        if not np.allclose(R, R.T, rtol=0.0, atol=PSD_TOLERANCE):
            raise ConfigError("R must be symmetric")
        try:
            linalg.cho_factor(R)
        except linalg.LinAlgError as exc:
            raise ConfigError("R must be positive definite") from exc
        for name, arr in (("F", F), ("H", H), ("Q", Q), ("R", R), ("x0", x0), ("P0", P0)):
            object.__setattr__(self, name, _frozen(arr))

    @property
    def state_dim(self) -> int:
        return self.F.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class KfState:
    x: Vector
    P: Matrix
    t: int = 0


@dataclass(frozen=True)
class KfConfig:
    """
    Settings for the default constant-velocity baseline. ``noise_std`` left
    unset means "use the generator's observation noise".
    """
    process_noise: float = 1e-3
    initial_variance: float = 1.0
    noise_std: float | None = None

    def __post_init__(self) -> None:
        if self.process_noise < 0:
            raise ConfigError(f"process_noise must be nonnegative, got {self.process_noise}")
        if self.initial_variance < 0:
            raise ConfigError(f"initial_variance must be nonnegative, got {self.initial_variance}")
        if self.noise_std is not None and self.noise_std <= 0:
            raise ConfigError(f"noise_std must be positive, got {self.noise_std}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> KfConfig:
        check_known_keys("kalman", values, set(cls.__dataclass_fields__))
        return cls(**values)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def constant_velocity_model(
    m: int,
    noise_std: float,
    *,
    process_noise: float = 1e-3,
    initial_variance: float = 1.0,
) -> KfModel:
    """
    Block-diagonal constant-velocity model, one (level, slope) pair per channel:
    ``F = [[1, 1], [0, 1]]``, ``H = [1, 0]``, ``Q = process_noise * I``,
    ``R = noise_std^2 * I``, ``P0 = initial_variance * I``, ``x0 = 0``.
    """
    if m < 1:
        raise ConfigError(f"m must be positive, got {m}")
    if noise_std <= 0:
        raise ConfigError(f"noise_std must be positive, got {noise_std}")
    F = linalg.block_diag(*[np.array([[1.0, 1.0], [0.0, 1.0]])] * m)
    H = linalg.block_diag(*[np.array([[1.0, 0.0]])] * m)
    k = 2 * m
    return KfModel(
        F=F,
        H=H,
        Q=process_noise * np.eye(k),
        R=noise_std**2 * np.eye(m),
        x0=np.zeros(k),
        P0=initial_variance * np.eye(k),
    )


def kf_init(model: KfModel) -> KfState:
    return KfState(x=model.x0, P=model.P0, t=0)


def kf_step(model: KfModel, state: KfState, x_t: ArrayLike) -> tuple[KfState, float]:
    """
    *kf_step*

    Predict, score the innovation, then update.

    The posterior covariance uses the Joseph form and is symmetrised
    explicitly; ``S`` is inverted only through its Cholesky factor.

    Raises
    ------
    KalmanDegenerateError
        ``S = H P^- H^T + R`` is not positive definite.
    """
    obs = as_vector(x_t, model.obs_dim, name="x_t")
    require_finite(obs, name="x_t")
    F, H = model.F, model.H

    x_prior = F @ state.x
    P_prior = F @ state.P @ F.T + model.Q
    S = H @ P_prior @ H.T + model.R
    S = 0.5 * (S + S.T)
    try:
        factor = linalg.cho_factor(S, lower=True)
    except linalg.LinAlgError as exc:
        raise KalmanDegenerateError(f"innovation covariance is not positive definite at t={state.t}") from exc

    nu = obs - H @ x_prior
    score = max(float(nu @ linalg.cho_solve(factor, nu)), 0.0)

    # K = P^- H^T S^-1, obtained as (S^-1 H P^-)^T
    K = linalg.cho_solve(factor, H @ P_prior).T
    x_post = x_prior + K @ nu
    I_KH = np.eye(model.state_dim) - K @ H
    P_post = I_KH @ P_prior @ I_KH.T + K @ model.R @ K.T
    P_post = 0.5 * (P_post + P_post.T)
    return KfState(x=x_post, P=P_post, t=state.t + 1), score


def kf_run(model: KfModel, xs: ArrayLike) -> Vector:
    """Fold ``kf_step`` over ``xs`` from ``(x0, P0)``; one score per step."""
    arr = as_sequence(xs, m=model.obs_dim)
    state = kf_init(model)
    scores = np.empty(arr.shape[0])
    for t, x_t in enumerate(arr):
        state, scores[t] = kf_step(model, state, x_t)
    return scores
