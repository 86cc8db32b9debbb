from .sequences import LabeledSequence
from .config import TrainConfig
from .loss import LossTerms, ForwardCache, forward_batch, total_loss, relu_margin
from .backward import backward, backward_batch, finite_difference_gradient
from .calibration import ThresholdCalibration, calibrate_threshold, candidate_thresholds
from .optimizer import (
    TrainReport,
    apply_gradients,
    batch_gradient,
    calibrate_on,
    clip_gradients,
    gradient_step,
    train,
)

__all__ = [
    "LabeledSequence",
    "TrainConfig",
    "LossTerms",
    "ForwardCache",
    "forward_batch",
    "total_loss",
    "relu_margin",
    "backward",
    "backward_batch",
    "finite_difference_gradient",
    "ThresholdCalibration",
    "calibrate_threshold",
    "candidate_thresholds",
    "TrainReport",
    "apply_gradients",
    "batch_gradient",
    "calibrate_on",
    "clip_gradients",
    "gradient_step",
    "train",
]
