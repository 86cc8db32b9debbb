import numpy as np

from ...errors import ShapeError, NonFiniteInputError, LabelError, EmptyInputError
from .typing import ArrayLike, Vector, Matrix, Labels


def as_vector(value: ArrayLike, size: int, *, name: str) -> Vector:
    """
    *as_vector*

    Coerce to a float64 vector of exactly ``size`` entries.

    No broadcasting: scalars and 2-D inputs are rejected even when their
    element count matches.
    """
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != size:
        raise ShapeError(f"{name} must have shape ({size},), got {arr.shape}")
    return arr


def as_matrix(value: ArrayLike, rows: int, cols: int, *, name: str) -> Matrix:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (rows, cols):
        raise ShapeError(f"{name} must have shape ({rows}, {cols}), got {arr.shape}")
    return arr


def as_sequence(xs: ArrayLike, *, name: str = "xs", m: int | None = None) -> Matrix:
    """
    *as_sequence*

    Coerce an observation sequence to a (T, m) float64 array.

    Accepts a list of equal-length vectors or a 2-D array. A ragged list is a
    ShapeError; an empty sequence is an EmptyInputError.
    """
    if isinstance(xs, np.ndarray):
        arr = xs.astype(np.float64, copy=False)
    else:
        rows = list(xs)  # type: ignore[arg-type]
        if not rows:
            raise EmptyInputError(f"{name} must contain at least one observation")
        if any(np.ndim(r) != 1 for r in rows):
            raise ShapeError(f"{name} observations must be vectors")
        if len({len(r) for r in rows}) != 1:
            raise ShapeError(f"{name} has ragged observations")
        arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be a (T, m) sequence, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptyInputError(f"{name} must contain at least one observation")
    if m is not None and arr.shape[1] != m:
        raise ShapeError(f"{name} observations must have dimension {m}, got {arr.shape[1]}")
    return arr


def as_labels(ys: ArrayLike, length: int | None = None, *, name: str = "labels") -> Labels:
    """
    Coerce binary labels to an int8 vector, rejecting anything outside {0, 1}.
    """
    raw = np.asarray(ys)
    if raw.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {raw.shape}")
    if length is not None and raw.shape[0] != length:
        raise ShapeError(f"{name} has length {raw.shape[0]}, expected {length}")
    if raw.size and not np.isin(raw, (0, 1)).all():
        bad = int(np.flatnonzero(~np.isin(raw, (0, 1)))[0])
        raise LabelError(f"{name}[{bad}] = {raw[bad]!r} is not a binary label")
    return raw.astype(np.int8)


def require_finite(arr: np.ndarray, *, name: str) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteInputError(f"{name} contains non-finite values")


def same_length(a: ArrayLike, b: ArrayLike, *, names: tuple[str, str]) -> int:
    na, nb = len(a), len(b)  # type: ignore[arg-type]
    if na != nb:
        raise ShapeError(f"{names[0]} and {names[1]} differ in length ({na} vs {nb})")
    return na
