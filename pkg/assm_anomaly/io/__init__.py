from .checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .datasets import (
    FORMATS,
    SampleRecord,
    read_dataset,
    read_samples,
    resolve_format,
    write_dataset,
    write_verdict,
)
from .plots import TracePlot, emit_trace_plot
from .reports import comparison_table, render_report, write_report

__all__ = [
    "FORMAT_VERSION",
    "MAGIC",
    "Checkpoint",
    "decode_checkpoint",
    "encode_checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "FORMATS",
    "SampleRecord",
    "read_dataset",
    "read_samples",
    "resolve_format",
    "write_dataset",
    "write_verdict",
    "TracePlot",
    "emit_trace_plot",
    "comparison_table",
    "render_report",
    "write_report",
]
