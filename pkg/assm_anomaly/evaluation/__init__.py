from .throughput import ThroughputResult, measure_throughput
from .metrics import (
    ConfusionCounts,
    EvalResult,
    LatencyResult,
    confusion_counts,
    detection_latency,
    evaluate_scores,
    f1_from_counts,
    f1_score,
    label_events,
    precision_recall,
    roc_auc,
)

__all__ = [
    "ThroughputResult",
    "measure_throughput",
    "ConfusionCounts",
    "EvalResult",
    "LatencyResult",
    "confusion_counts",
    "detection_latency",
    "evaluate_scores",
    "f1_from_counts",
    "f1_score",
    "label_events",
    "precision_recall",
    "roc_auc",
]
