from __future__ import annotations
from dataclasses import dataclass
from typing import Callable, Iterable
import numpy as np
from orm_loader.helpers import get_logger

from ..base import ArrayLike, SequenceScorer, Vector
from ..baselines import KfModel, kf_run
from ..model import Parameters, score_sequence

logger = get_logger(__name__)


@dataclass(frozen=True)
class AssmScorer:
    params: Parameters
    name: str = "assm"

    def score_sequence(self, xs: ArrayLike) -> Vector:
        return score_sequence(self.params, xs)


@dataclass(frozen=True)
class KalmanScorer:
    model: KfModel
    name: str = "kf"

    def score_sequence(self, xs: ArrayLike) -> Vector:
        return kf_run(self.model, xs)


class DetectorRegistry:
    """
    Lazy registry of named sequence scorers.

    Scorers are constructed on first access and cached for the lifetime of
    the registry, so an expensive builder (loading a checkpoint, deriving a
    baseline model) runs at most once per command.
    """

    def __init__(self) -> None:
        self._cache: dict[str, SequenceScorer] = {}
        self._builders: dict[str, Callable[[], SequenceScorer]] = {}

    def register(self, name: str, builder: Callable[[], SequenceScorer]) -> None:
        """
        Register a named scorer builder without building it.
        """
        if name in self._builders:
            raise KeyError(f"Detector '{name}' is already registered")
        self._builders[name] = builder

    def get(self, name: str) -> SequenceScorer:
        """
        Return a cached scorer by name, building it on first request.
        """
        if name in self._cache:
            return self._cache[name]

        if name not in self._builders:
            raise KeyError(
                f"No detector named '{name}' is registered. "
                f"Available detectors: {sorted(self._builders)}"
            )

        scorer = self._builders[name]()
        if not isinstance(scorer, SequenceScorer):
            raise TypeError(f"Builder for '{name}' returned {type(scorer).__name__}, not a scorer")
        logger.debug("Built detector '%s'", name)
        self._cache[name] = scorer
        return scorer

    def names(self) -> list[str]:
        return list(self._builders)

    def score_all(self, sequences: Iterable[ArrayLike]) -> dict[str, list[Vector]]:
        """Per-detector score traces for every sequence, in registration order."""
        seqs = list(sequences)
        return {
            name: [np.asarray(self.get(name).score_sequence(xs)) for xs in seqs]
            for name in self._builders
        }

    def __getitem__(self, name: str) -> SequenceScorer:
        return self.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._builders

    def __len__(self) -> int:
        return len(self._builders)


def detector_registry(params: Parameters, kf_model: KfModel) -> DetectorRegistry:
    """Registry holding the trained model as ``"assm"`` and the baseline as ``"kf"``."""
    registry = DetectorRegistry()
    registry.register("assm", lambda: AssmScorer(params))
    registry.register("kf", lambda: KalmanScorer(kf_model))
    return registry
