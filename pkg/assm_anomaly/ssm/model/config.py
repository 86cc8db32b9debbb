from __future__ import annotations
from dataclasses import dataclass, asdict
from typing import Any, Mapping

from ...config import check_known_keys
from ...errors import ConfigError
from ..base import Activation, Distance


@dataclass(frozen=True)
class ModelConfig:
    """
    *ModelConfig*

    Static description of one adaptive state-space model.

    Parameters
    ----------
    input_dim : int
        Observation dimension ``m``.
    state_dim : int
        Hidden state dimension ``d``.
    activation : Activation
        Nonlinearity applied to the gate inside the state update.
    distance : Distance
        Distance between an observation and its reconstruction.
    seed : int
        64-bit unsigned seed for parameter initialisation.
    """
    input_dim: int = 1
    state_dim: int = 16
    activation: Activation = Activation.TANH
    distance: Distance = Distance.L2
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("input_dim", "state_dim"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        try:
            object.__setattr__(self, "activation", Activation(self.activation))
            object.__setattr__(self, "distance", Distance(self.distance))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def m(self) -> int:
        return self.input_dim

    @property
    def d(self) -> int:
        return self.state_dim

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> ModelConfig:
        check_known_keys("model", values, set(cls.__dataclass_fields__))
        return cls(**values)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["activation"] = self.activation.value
        out["distance"] = self.distance.value
        return out
