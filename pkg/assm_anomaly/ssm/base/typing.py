from typing import Protocol, TypeAlias, runtime_checkable
import numpy as np
import numpy.typing as npt

Vector: TypeAlias = npt.NDArray[np.float64]
Matrix: TypeAlias = npt.NDArray[np.float64]
Labels: TypeAlias = npt.NDArray[np.int8]
ArrayLike: TypeAlias = npt.ArrayLike


@runtime_checkable
class SequenceScorer(Protocol):
    """
    Anything that maps one observation sequence (T, m) to T anomaly scores,
    starting from its own initial state.
    """
    name: str

    def score_sequence(self, xs: ArrayLike) -> Vector: ...


class SampleFn(Protocol):
    """One single-sample unit of work, called with a running sample index."""
    def __call__(self, i: int, /) -> object: ...

