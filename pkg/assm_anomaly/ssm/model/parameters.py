from __future__ import annotations
import math
from dataclasses import dataclass, fields
from typing import Any, ClassVar, Iterator, Self
import numpy as np
from orm_loader.helpers import get_logger

from ...errors import ShapeError
from ..base import Vector, Matrix, DefaultHyperparameters
from .config import ModelConfig

logger = get_logger(__name__)

TENSOR_FIELDS: tuple[str, ...] = ("A", "B", "C", "D", "E", "gamma", "W_f", "b_f", "w_s", "b_s")
SCALAR_FIELDS: frozenset[str] = frozenset({"gamma", "w_s", "b_s"})


def expected_shapes(m: int, d: int) -> dict[str, tuple[int, ...]]:
    return {
        "A": (d, d),
        "B": (d, m),
        "C": (d, d),
        "D": (d, d),
        "E": (d, m),
        "gamma": (),
        "W_f": (m, d),
        "b_f": (m,),
        "w_s": (),
        "b_s": (),
    }


def _frozen_copy(value: Any) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False, kw_only=True)
class TensorBundle:
    """
    *TensorBundle*

    Fixed set of named float64 tensors shared by model parameters and their
    gradients.

    Matrices and vectors are stored as read-only arrays; the three scalars
    (``gamma``, ``w_s``, ``b_s``) are stored as Python floats. Shapes are
    inferred from ``A`` (d x d) and ``B`` (d x m) and every other tensor is
    checked against them at construction; any mismatch is a ShapeError.
    """
    A: Matrix
    B: Matrix
    C: Matrix
    D: Matrix
    E: Matrix
    gamma: float
    W_f: Matrix
    b_f: Vector
    w_s: float
    b_s: float

    __hash__: ClassVar[None] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        A = np.asarray(self.A)
        B = np.asarray(self.B)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ShapeError(f"A must be a non-empty square matrix, got shape {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0] or B.shape[1] < 1:
            raise ShapeError(f"B must have shape ({A.shape[0]}, m), got {B.shape}")
        shapes = expected_shapes(B.shape[1], A.shape[0])
        for name in TENSOR_FIELDS:
            value = getattr(self, name)
            shape = np.shape(value)
            if shape != shapes[name]:
                raise ShapeError(
                    f"{type(self).__name__}.{name} must have shape {shapes[name]}, got {shape}"
                )
            if name in SCALAR_FIELDS:
                object.__setattr__(self, name, float(value))
            else:
                object.__setattr__(self, name, _frozen_copy(value))

    @property
    def input_dim(self) -> int:
        return self.B.shape[1]

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def shapes(self) -> dict[str, tuple[int, ...]]:
        return expected_shapes(self.input_dim, self.state_dim)

    @property
    def size(self) -> int:
        """Total number of scalar entries."""
        return sum(math.prod(s) for s in self.shapes.values())

    def tensors(self) -> dict[str, np.ndarray]:
        """Name -> array view, scalars as 0-d arrays, in canonical field order."""
        return {name: np.asarray(getattr(self, name)) for name in TENSOR_FIELDS}

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self.tensors().items())

    def _extra_fields(self) -> dict[str, Any]:
        return {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if f.name not in TENSOR_FIELDS
        }

    def with_tensors(self, tensors: dict[str, np.ndarray]) -> Self:
        """Same bundle type (and non-tensor fields) with replaced tensors."""
        return type(self)(**tensors, **self._extra_fields())

    def to_vector(self) -> Vector:
        return np.concatenate([np.ravel(t) for t in self.tensors().values()])

    def from_vector(self, flat: Vector) -> Self:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.size,):
            raise ShapeError(f"flat vector must have {self.size} entries, got {flat.shape}")
        out: dict[str, np.ndarray] = {}
        offset = 0
        for name, shape in self.shapes.items():
            n = math.prod(shape)
            out[name] = flat[offset:offset + n].reshape(shape)
            offset += n
        return self.with_tensors(out)

    def norm(self) -> float:
        """Global L2 norm across every tensor."""
        return math.sqrt(sum(float(np.sum(np.square(t))) for t in self.tensors().values()))

    def all_finite(self) -> bool:
        return all(bool(np.isfinite(t).all()) for t in self.tensors().values())

    def __eq__(self, other: object) -> bool:
        # exact, bit-level equality of every tensor
        if type(other) is not type(self):
            return NotImplemented
        if self._extra_fields() != other._extra_fields():  # type: ignore[attr-defined]
            return False
        mine, theirs = self.tensors(), other.tensors()  # type: ignore[attr-defined]
        return all(
            mine[k].shape == theirs[k].shape
            and mine[k].tobytes() == theirs[k].tobytes()
            for k in TENSOR_FIELDS
        )

    def __repr__(self) -> str:
        return f"<{type(self).__name__} m={self.input_dim} d={self.state_dim} entries={self.size}>"


@dataclass(frozen=True, eq=False, kw_only=True)
class Parameters(TensorBundle):
    """
    Learnable tensors of one model, bound to the ModelConfig that shaped them.

    Instances are immutable and safe to share read-only across threads;
    training and online adaptation always produce new instances.
    """
    config: ModelConfig

    def __post_init__(self) -> None:
        super().__post_init__()
        if (self.input_dim, self.state_dim) != (self.config.input_dim, self.config.state_dim):
            raise ShapeError(
                f"Parameters have (m={self.input_dim}, d={self.state_dim}) but config declares "
                f"(m={self.config.input_dim}, d={self.config.state_dim})"
            )


@dataclass(frozen=True, eq=False, kw_only=True)
class Gradients(TensorBundle):
    """Structure-matched mirror of Parameters holding dL/dtheta."""

    @classmethod
    def zeros_like(cls, bundle: TensorBundle) -> Gradients:
        return cls(**{name: np.zeros(shape) for name, shape in bundle.shapes.items()})


def spectral_radius(matrix: Matrix) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def init_parameters(config: ModelConfig) -> Parameters:
    """
    Seeded initialisation.

    ``A`` is a scaled Gaussian matrix rescaled so its spectral radius is 0.9;
    ``B``, ``C``, ``D``, ``E`` and ``W_f`` are uniform in [-1/sqrt(d), 1/sqrt(d)];
    ``b_f`` = 0, ``gamma`` = 1, ``w_s`` = 1, ``b_s`` = 0.
    Identical configs give bit-identical parameters.
    """
    m, d = config.input_dim, config.state_dim
    rng = np.random.default_rng(config.seed)

    A = rng.standard_normal((d, d)) / math.sqrt(d)
    rho = spectral_radius(A)
    if rho > 0.0:
        A = A * (DefaultHyperparameters.INIT_SPECTRAL_RADIUS / rho)

    bound = 1.0 / math.sqrt(d)
    B = rng.uniform(-bound, bound, size=(d, m))
    C = rng.uniform(-bound, bound, size=(d, d))
    D = rng.uniform(-bound, bound, size=(d, d))
    E = rng.uniform(-bound, bound, size=(d, m))
    W_f = rng.uniform(-bound, bound, size=(m, d))

    params = Parameters(
        A=A, B=B, C=C, D=D, E=E,
        gamma=1.0,
        W_f=W_f,
        b_f=np.zeros(m),
        w_s=1.0,
        b_s=0.0,
        config=config,
    )
    logger.debug("Initialised parameters m=%d d=%d seed=%d", m, d, config.seed)
    return params
