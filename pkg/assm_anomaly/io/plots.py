from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence
import matplotlib
from matplotlib.figure import Figure
import numpy as np
import pandas as pd
from orm_loader.helpers import get_logger

from ..errors import ShapeError
from ..ssm.base import ArrayLike, as_labels
from .datasets import FLOAT_FORMAT

logger = get_logger(__name__)

# fixed ids and text-as-paths keep the SVG byte-stable across runs
_SVG_RC = {"svg.hashsalt": "assm-trace", "svg.fonttype": "path"}


@dataclass(frozen=True)
class TracePlot:
    svg_path: Path
    csv_path: Path
    markers: int


def emit_trace_plot(
    scores: Mapping[str, Sequence[float] | ArrayLike],
    labels: ArrayLike,
    path: str | Path,
    *,
    title: str | None = None,
) -> TracePlot:
    """
    *emit_trace_plot*

    Overlay one score trace per method with the true anomaly steps marked,
    and write the plotted numbers next to it as CSV (``t``, one column per
    method, ``y``) with the ``.csv`` suffix.
    """
    y = as_labels(np.asarray(labels).ravel(), name="labels")
    traces = {name: np.asarray(values, dtype=np.float64).ravel() for name, values in scores.items()}
    if not traces:
        raise ShapeError("at least one score trace is required")
    for name, trace in traces.items():
        if trace.shape != y.shape:
            raise ShapeError(f"trace '{name}' has {trace.size} steps, labels have {y.size}")

    svg_path = Path(path).with_suffix(".svg")
    csv_path = svg_path.with_suffix(".csv")
    svg_path.parent.mkdir(parents=True, exist_ok=True)

    t = np.arange(y.size)
    anomalies = np.flatnonzero(y)
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(10, 4))
        ax = fig.add_subplot()
        for name, trace in traces.items():
            ax.plot(t, trace, linewidth=1.0, label=name)
        if anomalies.size:
            top = max(float(np.max(trace)) for trace in traces.values())
            ax.scatter(anomalies, np.full(anomalies.size, top), marker="v", color="red", zorder=3, label="anomaly")
        ax.set_xlabel("t")
        ax.set_ylabel("anomaly score")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})

    frame = pd.DataFrame({"t": t, **traces, "y": y.astype(np.int64)})
    frame.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Trace plot written to %s (%d anomaly markers)", svg_path, anomalies.size)
    return TracePlot(svg_path=svg_path, csv_path=csv_path, markers=int(anomalies.size))
