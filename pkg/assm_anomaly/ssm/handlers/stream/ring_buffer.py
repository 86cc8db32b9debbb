from __future__ import annotations
import numpy as np

from ...base import Vector


class RingBuffer:
    """
    Fixed-capacity window of the most recent stream steps.

    Each slot holds the observation, its optional label and the recurrent
    state the step started from (``h_{t-1}``, ``x_{t-1}``), so a gradient
    step can replay the window from where it began. Storage is allocated
    once; the oldest slot is overwritten when full.
    """

    def __init__(self, capacity: int, m: int, d: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._xs = np.zeros((capacity, m))
        self._ys = np.zeros(capacity, dtype=np.int8)
        self._labelled = np.zeros(capacity, dtype=bool)
        self._h_prev = np.zeros((capacity, d))
        self._x_prev = np.zeros((capacity, m))
        self._offset = 0

    def __len__(self) -> int:
        return min(self.capacity, self._offset)

    @property
    def total_appended(self) -> int:
        return self._offset

    @property
    def nbytes(self) -> int:
        return sum(a.nbytes for a in (self._xs, self._ys, self._labelled, self._h_prev, self._x_prev))

    def append(self, x: Vector, y: int | None, h_prev: Vector, x_prev: Vector) -> None:
        slot = self._offset % self.capacity
        self._xs[slot] = x
        self._h_prev[slot] = h_prev
        self._x_prev[slot] = x_prev
        if y is None:
            self._labelled[slot] = False
            self._ys[slot] = 0
        else:
            self._labelled[slot] = True
            self._ys[slot] = y
        self._offset += 1

    def _slots(self, count: int) -> np.ndarray:
        """Slot indices of the newest ``count`` entries, oldest first."""
        return (np.arange(self._offset - count, self._offset)) % self.capacity

    def labelled_suffix(self, limit: int) -> int:
        """Length of the newest run of labelled entries, capped at ``limit``."""
        count = 0
        for slot in self._slots(min(limit, len(self)))[::-1]:
            if not self._labelled[slot]:
                break
            count += 1
        return count

    def window(self, count: int) -> tuple[np.ndarray, np.ndarray, Vector, Vector]:
        """
        Copies of the newest ``count`` observations and labels, plus the state
        the oldest of them started from.
        """
        if not 1 <= count <= len(self):
            raise ValueError(f"window of {count} entries requested from a buffer holding {len(self)}")
        slots = self._slots(count)
        first = slots[0]
        return self._xs[slots], self._ys[slots], self._h_prev[first].copy(), self._x_prev[first].copy()
