"""
Detection metrics over per-step scores and binary labels: F1, ROC-AUC and
event-level detection latency, plus the pooled evaluation of a detector.
"""
from __future__ import annotations
from dataclasses import dataclass, asdict
from typing import Any, NamedTuple, Sequence
import numpy as np
from scipy.stats import rankdata
from orm_loader.helpers import get_logger

from ..errors import ConfigError, LabelError
from ..ssm.base import ArrayLike, DefaultHyperparameters, as_labels, require_finite, same_length
from .throughput import ThroughputResult

logger = get_logger(__name__)


class ConfusionCounts(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _binary(values: ArrayLike, name: str) -> np.ndarray:
    return as_labels(np.asarray(values).ravel(), name=name).astype(bool)


def confusion_counts(preds: ArrayLike, labels: ArrayLike) -> ConfusionCounts:
    p = _binary(preds, "preds")
    y = _binary(labels, "labels")
    same_length(p, y, names=("preds", "labels"))
    tp = int(np.count_nonzero(p & y))
    fp = int(np.count_nonzero(p & ~y))
    fn = int(np.count_nonzero(~p & y))
    return ConfusionCounts(tp=tp, fp=fp, tn=p.size - tp - fp - fn, fn=fn)


def precision_recall(counts: ConfusionCounts) -> tuple[float, float]:
    """Precision and recall, each 0 when its denominator is 0."""
    predicted = counts.tp + counts.fp
    actual = counts.tp + counts.fn
    precision = counts.tp / predicted if predicted else 0.0
    recall = counts.tp / actual if actual else 0.0
    return precision, recall


def f1_from_counts(counts: ConfusionCounts) -> float:
    denom = 2 * counts.tp + counts.fp + counts.fn
    return 2 * counts.tp / denom if denom else 0.0


def f1_score(preds: ArrayLike, labels: ArrayLike) -> float:
    """
    Harmonic mean of precision and recall, computed as
    ``2 TP / (2 TP + FP + FN)``; 0 when there is nothing to find and nothing
    was flagged.
    """
    return f1_from_counts(confusion_counts(preds, labels))


def roc_auc(scores: ArrayLike, labels: ArrayLike) -> float:
    """
    *roc_auc*

    Probability that a random positive outscores a random negative, ties
    counting one half (Mann-Whitney U over average ranks).

    ``roc_auc(s, y) + roc_auc(-s, y) == 1`` holds exactly: the smaller of
    ``U`` and ``N - U`` is always the one divided.

    Raises
    ------
    LabelError
        Only one class present.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = _binary(labels, "labels")
    same_length(s, y, names=("scores", "labels"))
    require_finite(s, name="scores")
    n_pos = int(np.count_nonzero(y))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise LabelError("ROC-AUC needs at least one positive and one negative label")

    ranks = rankdata(s, method="average")
    u = float(ranks[y].sum()) - n_pos * (n_pos + 1) / 2.0
    pairs = float(n_pos) * float(n_neg)
    if 2.0 * u <= pairs:
        return u / pairs
    return 1.0 - (pairs - u) / pairs


def label_events(labels: ArrayLike) -> list[tuple[int, int]]:
    """Maximal runs of positive labels as half-open ``(start, end)`` pairs."""
    y = _binary(labels, "labels").astype(np.int8)
    edges = np.diff(np.concatenate([[0], y, [0]]))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return [(int(a), int(b)) for a, b in zip(starts, ends)]


@dataclass(frozen=True)
class LatencyResult:
    """
    Per-event delays in steps (None for a missed event) and their mean over
    detected events, None when nothing was detected.
    """
    mean: float | None
    per_event: tuple[int | None, ...]

    @property
    def detected(self) -> int:
        return sum(1 for v in self.per_event if v is not None)

    @property
    def missed(self) -> int:
        return len(self.per_event) - self.detected


def _event_latencies(p: np.ndarray, y: np.ndarray, horizon: int) -> list[int | None]:
    alarms = np.flatnonzero(p)
    out: list[int | None] = []
    for start, _ in label_events(y):
        k = int(np.searchsorted(alarms, start, side="left"))
        if k < alarms.size and alarms[k] - start < horizon:
            out.append(int(alarms[k] - start))
        else:
            out.append(None)
    return out


def _mean_latency(per_event: Sequence[int | None]) -> float | None:
    hits = [v for v in per_event if v is not None]
    return float(np.mean(hits)) if hits else None


def detection_latency(
    preds: ArrayLike,
    labels: ArrayLike,
    horizon: int = DefaultHyperparameters.DETECTION_HORIZON,
) -> LatencyResult:
    """
    *detection_latency*

    For every event (maximal run of positive labels) starting at ``t0``, the
    delay to the first alarm at ``t >= t0`` with ``t - t0 < horizon``. Events
    without such an alarm are misses and stay out of the mean.
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be positive, got {horizon}")
    p = _binary(preds, "preds")
    y = _binary(labels, "labels")
    same_length(p, y, names=("preds", "labels"))
    per_event = _event_latencies(p, y, horizon)
    return LatencyResult(mean=_mean_latency(per_event), per_event=tuple(per_event))


@dataclass(frozen=True)
class EvalResult:
    f1: float
    roc_auc: float | None
    mean_latency: float | None
    detected_events: int
    missed_events: int
    counts: ConfusionCounts
    threshold: float
    throughput: ThroughputResult | None = None

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["counts"] = self.counts._asdict()
        precision, recall = precision_recall(self.counts)
        out["precision"] = precision
        out["recall"] = recall
        if self.throughput is None:
            out.pop("throughput")
        else:
            out["throughput"] = self.throughput.to_dict()
        return out


def evaluate_scores(
    scores: Sequence[ArrayLike],
    labels: Sequence[ArrayLike],
    threshold: float,
    *,
    horizon: int = DefaultHyperparameters.DETECTION_HORIZON,
    throughput: ThroughputResult | None = None,
) -> EvalResult:
    """
    *evaluate_scores*

    Pool per-sequence score traces into one EvalResult. A step is flagged when
    its score exceeds ``threshold``. Counts and ROC-AUC are computed over all
    steps; latency events never span two sequences and the mean runs over
    every detected event in every sequence.
    """
    if len(scores) != len(labels):
        raise ConfigError(f"{len(scores)} score traces for {len(labels)} label sequences")
    flat_scores: list[np.ndarray] = []
    flat_labels: list[np.ndarray] = []
    per_event: list[int | None] = []
    for s, y in zip(scores, labels):
        s_arr = np.asarray(s, dtype=np.float64).ravel()
        y_arr = _binary(y, "labels")
        same_length(s_arr, y_arr, names=("scores", "labels"))
        per_event.extend(_event_latencies(s_arr > threshold, y_arr, horizon))
        flat_scores.append(s_arr)
        flat_labels.append(y_arr)

    all_scores = np.concatenate(flat_scores) if flat_scores else np.zeros(0)
    all_labels = np.concatenate(flat_labels) if flat_labels else np.zeros(0, dtype=bool)
    counts = confusion_counts(all_scores > threshold, all_labels)
    try:
        auc: float | None = roc_auc(all_scores, all_labels)
    except LabelError:
        logger.warning("ROC-AUC undefined: evaluation data holds a single class")
        auc = None

    detected = sum(1 for v in per_event if v is not None)
    return EvalResult(
        f1=f1_from_counts(counts),
        roc_auc=auc,
        mean_latency=_mean_latency(per_event),
        detected_events=detected,
        missed_events=len(per_event) - detected,
        counts=counts,
        threshold=float(threshold),
        throughput=throughput,
    )
