from .constants import Activation, Distance, DefaultHyperparameters
from .typing import Vector, Matrix, Labels, ArrayLike, SequenceScorer, SampleFn
from .shape_checks import as_vector, as_matrix, as_sequence, as_labels, require_finite, same_length

__all__ = [
    "Activation",
    "Distance",
    "DefaultHyperparameters",
    "Vector",
    "Matrix",
    "Labels",
    "ArrayLike",
    "SequenceScorer",
    "SampleFn",
    "as_vector",
    "as_matrix",
    "as_sequence",
    "as_labels",
    "require_finite",
    "same_length",
]
