from .config import ModelConfig
from .parameters import (
    TENSOR_FIELDS,
    TensorBundle,
    Parameters,
    Gradients,
    expected_shapes,
    init_parameters,
    spectral_radius,
)
from .recurrence import (
    HiddenState,
    StepOutput,
    StepWorkspace,
    zero_state,
    compute_gate,
    state_update,
    project,
    anomaly_score,
    step,
    step_into,
    fold_sequence,
    run_sequence,
    score_sequence,
)

__all__ = [
    "ModelConfig",
    "TENSOR_FIELDS",
    "TensorBundle",
    "Parameters",
    "Gradients",
    "expected_shapes",
    "init_parameters",
    "spectral_radius",
    "HiddenState",
    "StepOutput",
    "StepWorkspace",
    "zero_state",
    "compute_gate",
    "state_update",
    "project",
    "anomaly_score",
    "step",
    "step_into",
    "fold_sequence",
    "run_sequence",
    "score_sequence",
]
