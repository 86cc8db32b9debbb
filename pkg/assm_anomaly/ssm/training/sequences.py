from __future__ import annotations
from dataclasses import dataclass
import numpy as np

from ..base import Matrix, Labels, ArrayLike, as_sequence, as_labels, require_finite


@dataclass(frozen=True, eq=False)
class LabeledSequence:
    """
    *LabeledSequence*

    One sensor sequence ``x_1..x_T`` (shape (T, m)) with a binary anomaly
    label per step. Arrays are copied and frozen on construction.
    """
    xs: Matrix
    ys: Labels

    def __post_init__(self) -> None:
        xs = np.array(as_sequence(self.xs), dtype=np.float64, copy=True)
        require_finite(xs, name="xs")
        ys = as_labels(self.ys, xs.shape[0], name="ys").copy()
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def from_arrays(cls, xs: ArrayLike, ys: ArrayLike) -> LabeledSequence:
        return cls(xs=xs, ys=ys)  # type: ignore[arg-type]

    @property
    def length(self) -> int:
        return self.xs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.xs.shape[1]

    @property
    def n_anomalies(self) -> int:
        return int(self.ys.sum())

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledSequence):
            return NotImplemented
        return (
            self.xs.shape == other.xs.shape
            and self.xs.tobytes() == other.xs.tobytes()
            and self.ys.tobytes() == other.ys.tobytes()
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"<LabeledSequence T={self.length} m={self.input_dim} anomalies={self.n_anomalies}>"
