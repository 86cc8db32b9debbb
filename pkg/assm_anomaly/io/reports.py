from __future__ import annotations
import json
import math
from pathlib import Path
from typing import Any, Mapping
import pandas as pd
from orm_loader.helpers import get_logger

from ..evaluation import EvalResult

logger = get_logger(__name__)


def _json_safe(value: Any) -> Any:
    # strict JSON has no infinities; spell them out
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Mapping):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def render_report(report: Mapping[str, Any]) -> str:
    return json.dumps(_json_safe(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path: str | Path, report: Mapping[str, Any]) -> None:
    """Write ``report`` as strict, key-sorted JSON."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render_report(report), encoding="utf-8")
    logger.info("Report written to %s", target)


def comparison_table(results: Mapping[str, EvalResult]) -> pd.DataFrame:
    """One row per method: F1, ROC-AUC, mean latency and, when measured, throughput."""
    rows = []
    for method, result in results.items():
        row: dict[str, Any] = {
            "method": method,
            "f1": result.f1,
            "roc_auc": result.roc_auc,
            "latency": result.mean_latency,
            "missed_events": result.missed_events,
        }
        if result.throughput is not None:
            row["samples_per_s"] = result.throughput.samples_per_second
        rows.append(row)
    return pd.DataFrame(rows).set_index("method")
