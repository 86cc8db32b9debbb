from __future__ import annotations
from dataclasses import dataclass, asdict
from typing import Any, Mapping

from ...config import check_known_keys
from ...errors import ConfigError
from ..base import DefaultHyperparameters as H


@dataclass(frozen=True)
class TrainConfig:
    """
    *TrainConfig*

    Optimiser settings for supervised training.

    Parameters
    ----------
    alpha : float
        Weight of the classification term against reconstruction.
    learning_rate : float
        Step size of plain gradient descent. Zero leaves parameters untouched.
    epochs : int
        Passes over the training set.
    bptt_window : int
        Truncation length; gradient flow is detached at window boundaries.
    batch_size : int
        Sequences per gradient step.
    grad_clip : float
        Maximum global gradient norm after clipping.
    seed : int
        Seed for the per-epoch shuffle.
    mask_anomalous_recon : bool
        When set, the reconstruction term only counts steps labelled normal.
    workers : int
        Threads evaluating gradient chunks. Results do not depend on it.
    """
    alpha: float = H.ALPHA
    learning_rate: float = H.LEARNING_RATE
    epochs: int = H.EPOCHS
    bptt_window: int = H.BPTT_WINDOW
    batch_size: int = H.BATCH_SIZE
    grad_clip: float = H.GRAD_CLIP
    seed: int = 0
    mask_anomalous_recon: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be nonnegative, got {self.learning_rate}")
        if self.grad_clip <= 0:
            raise ConfigError(f"grad_clip must be positive, got {self.grad_clip}")
        for name in ("epochs", "bptt_window", "batch_size", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> TrainConfig:
        check_known_keys("train", values, set(cls.__dataclass_fields__))
        return cls(**values)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)
