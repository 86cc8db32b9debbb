from __future__ import annotations
import math
from typing import NamedTuple
import numpy as np
from orm_loader.helpers import get_logger

from ...errors import EmptyInputError, LabelError
from ..base import ArrayLike, Vector, as_labels, require_finite, same_length

logger = get_logger(__name__)


class ThresholdCalibration(NamedTuple):
    threshold: float
    f1: float


def candidate_thresholds(scores: Vector) -> Vector:
    """
    +inf, the midpoints between consecutive distinct scores, and -inf,
    in descending order.
    """
    distinct = np.unique(scores)[::-1]
    mids = (distinct[:-1] + distinct[1:]) / 2.0
    return np.concatenate([[math.inf], mids, [-math.inf]])


def calibrate_threshold(scores: ArrayLike, labels: ArrayLike) -> ThresholdCalibration:
    """
    *calibrate_threshold*

    Pick the score cutoff that maximises F1, where a step is flagged when
    ``score > threshold``.

    Every candidate from ``candidate_thresholds`` is evaluated in a single
    sorted sweep. Among equally good candidates the highest threshold wins,
    which is the one raising the fewest alarms.

    Raises
    ------
    LabelError
        No positive label, so F1 is undefined for every threshold.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = as_labels(np.asarray(labels).ravel(), name="labels")
    same_length(s, y, names=("scores", "labels"))
    if s.size == 0:
        raise EmptyInputError("cannot calibrate a threshold on zero scores")
    require_finite(s, name="scores")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise LabelError("threshold calibration needs at least one positive label")

    candidates = candidate_thresholds(s)
    all_sorted = np.sort(s)
    pos_sorted = np.sort(s[y == 1])
    predicted = s.size - np.searchsorted(all_sorted, candidates, side="right")
    hits = pos_sorted.size - np.searchsorted(pos_sorted, candidates, side="right")
    f1 = 2.0 * hits / (predicted + n_pos)

    best = int(np.argmax(f1))
    logger.debug("Calibrated over %d candidates: threshold=%r f1=%.6f", candidates.size, candidates[best], f1[best])
    return ThresholdCalibration(float(candidates[best]), float(f1[best]))
