"""
Dataset and stream file formats.

CSV: one row per step with columns ``split, seq_id, t, x_0 .. x_{m-1}, y``.
NDJSON: one object per step, ``{"split", "seq_id", "t", "x": [...], "y"}``.
Floats are written with 17 significant digits so values survive the round
trip unchanged. A missing ``split`` column or field places every sequence in
the test split.

Every rejection names the offending line (1-based, CSV header included).
"""
from __future__ import annotations
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, Literal, TextIO
import numpy as np
import pandas as pd
from orm_loader.helpers import get_logger

from ..datagen import SPLITS, Dataset
from ..errors import ConfigError, DataFormatError, EmptyInputError
from ..ssm.handlers import Verdict
from ..ssm.training import LabeledSequence

logger = get_logger(__name__)

DatasetFormat = Literal["csv", "ndjson"]
FORMATS: tuple[DatasetFormat, ...] = ("csv", "ndjson")
FLOAT_FORMAT = "%.17g"
_X_COLUMN = re.compile(r"^x_(\d+)$")


def resolve_format(path: str | Path, fmt: str | None = None) -> DatasetFormat:
    """Explicit ``fmt`` wins; otherwise the file suffix decides."""
    if fmt is None:
        suffix = Path(path).suffix.lower().lstrip(".")
        fmt = {"jsonl": "ndjson", "json": "ndjson"}.get(suffix, suffix)
    if fmt not in FORMATS:
        raise ConfigError(f"Unknown dataset format '{fmt}'. Available formats: {list(FORMATS)}")
    return fmt  # type: ignore[return-value]


@dataclass(frozen=True)
class SampleRecord:
    t: int
    x: tuple[float, ...]
    y: int | None = None


# ---- shared record validation ---------------------------------------------

def _as_int(value: Any, what: str, line: int) -> int:
    if isinstance(value, bool):
        raise DataFormatError(f"{what} must be an integer, got {value!r}", line=line)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)) and float(value).is_integer():
        return int(value)
    raise DataFormatError(f"{what} must be an integer, got {value!r}", line=line)


def _as_label(value: Any, line: int) -> int:
    y = _as_int(value, "label", line)
    if y not in (0, 1):
        raise DataFormatError(f"label must be 0 or 1, got {y}", line=line)
    return y


def _as_observation(values: Any, line: int, m: int | None, *, finite: bool = True) -> tuple[float, ...]:
    if not isinstance(values, list) or not values:
        raise DataFormatError("x must be a non-empty array of numbers", line=line)
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
        raise DataFormatError("x must contain only numbers", line=line)
    x = tuple(float(v) for v in values)
    if finite and not all(np.isfinite(x)):
        raise DataFormatError("x contains non-finite values", line=line)
    if m is not None and len(x) != m:
        raise DataFormatError(f"x has {len(x)} entries, expected {m}", line=line)
    return x


class _SequenceAssembler:
    """Collects steps into sequences keyed by (split, seq_id), in first-seen order."""

    def __init__(self) -> None:
        self._steps: dict[tuple[str, int], tuple[list[int], list[tuple[float, ...]], list[int]]] = {}
        self._last: tuple[str, int] | None = None

    def add(self, split: str, seq_id: int, t: int, x: tuple[float, ...], y: int, line: int) -> None:
        if split not in SPLITS:
            raise DataFormatError(f"split must be one of {list(SPLITS)}, got {split!r}", line=line)
        key = (split, seq_id)
        if key != self._last and key in self._steps:
            raise DataFormatError(f"rows of sequence {seq_id} ({split}) are not contiguous", line=line)
        ts, xs, ys = self._steps.setdefault(key, ([], [], []))
        if ts and t <= ts[-1]:
            raise DataFormatError(f"t must be strictly increasing within a sequence, got {t} after {ts[-1]}", line=line)
        ts.append(t)
        xs.append(x)
        ys.append(y)
        self._last = key

    def build(self) -> Dataset:
        if not self._steps:
            raise EmptyInputError("dataset file contains no samples")
        splits: dict[str, list[LabeledSequence]] = {name: [] for name in SPLITS}
        for (split, _), (_, xs, ys) in self._steps.items():
            splits[split].append(LabeledSequence(xs=np.array(xs, dtype=np.float64), ys=np.array(ys, dtype=np.int8)))
        return Dataset(train=tuple(splits["train"]), test=tuple(splits["test"]))


# ---- CSV -------------------------------------------------------------------

def _dataset_frame(dataset: Dataset) -> pd.DataFrame:
    m = dataset.input_dim or 1
    frames = []
    for split in SPLITS:
        seqs = dataset.split(split)
        if not seqs:
            continue
        lengths = np.array([s.length for s in seqs])
        frame = pd.DataFrame({
            "split": np.repeat(split, lengths.sum()),
            "seq_id": np.repeat(np.arange(len(seqs)), lengths),
            "t": np.concatenate([np.arange(n) for n in lengths]),
        })
        xs = np.concatenate([s.xs for s in seqs])
        for j in range(m):
            frame[f"x_{j}"] = xs[:, j]
        frame["y"] = np.concatenate([s.ys for s in seqs]).astype(np.int64)
        frames.append(frame)
    if not frames:
        raise EmptyInputError("dataset holds no sequences")
    return pd.concat(frames, ignore_index=True)


def _write_csv(path: Path, dataset: Dataset) -> None:
    _dataset_frame(dataset).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _first_bad_line(mask: pd.Series) -> int:
    # data row i sits on file line i + 2 (header is line 1)
    return int(np.flatnonzero(mask.to_numpy())[0]) + 2


def _read_csv(path: Path) -> Dataset:
    try:
        df = pd.read_csv(path, float_precision="round_trip", keep_default_na=False, na_values=[""])
    except pd.errors.EmptyDataError as exc:
        raise EmptyInputError(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise DataFormatError(f"ragged row in {path}", line=int(match.group(1)) if match else None) from exc
    if df.empty:
        raise EmptyInputError(f"{path} has a header but no samples")

    x_cols = sorted((c for c in df.columns if _X_COLUMN.match(str(c))), key=lambda c: int(c[2:]))
    if [int(c[2:]) for c in x_cols] != list(range(len(x_cols))) or not x_cols:
        raise DataFormatError("observation columns must be x_0 .. x_{m-1}", line=1)
    missing = {"seq_id", "t", "y"} - set(df.columns)
    if missing:
        raise DataFormatError(f"missing columns {sorted(missing)}", line=1)

    numeric = ["seq_id", "t", *x_cols, "y"]
    for col in numeric:
        empty = df[col].isna()
        if empty.any():
            raise DataFormatError(f"missing value in column '{col}'", line=_first_bad_line(empty))
        if not pd.api.types.is_numeric_dtype(df[col]):
            bad = pd.to_numeric(df[col], errors="coerce").isna()
            raise DataFormatError(f"non-numeric value in column '{col}'", line=_first_bad_line(bad))
    xs = df[x_cols].to_numpy(dtype=np.float64)
    not_finite = ~np.isfinite(xs).all(axis=1)
    if not_finite.any():
        raise DataFormatError("non-finite observation", line=int(np.flatnonzero(not_finite)[0]) + 2)
    for col in ("seq_id", "t", "y"):
        fractional = df[col] % 1 != 0
        if fractional.any():
            raise DataFormatError(f"column '{col}' must hold integers", line=_first_bad_line(fractional))
    bad_label = ~df["y"].isin((0, 1))
    if bad_label.any():
        line = _first_bad_line(bad_label)
        raise DataFormatError(f"label must be 0 or 1, got {df['y'].iloc[line - 2]}", line=line)

    splits = df["split"].astype(str).to_numpy() if "split" in df.columns else np.full(len(df), "test")
    seq_ids = df["seq_id"].to_numpy(dtype=np.int64)
    ts = df["t"].to_numpy(dtype=np.int64)
    ys = df["y"].to_numpy(dtype=np.int64)
    assembler = _SequenceAssembler()
    for i in range(len(df)):
        assembler.add(str(splits[i]), int(seq_ids[i]), int(ts[i]), tuple(xs[i]), int(ys[i]), i + 2)
    return assembler.build()


# ---- NDJSON ----------------------------------------------------------------

def _records(dataset: Dataset) -> Iterator[dict[str, Any]]:
    for split in SPLITS:
        for seq_id, seq in enumerate(dataset.split(split)):
            for t in range(seq.length):
                yield {
                    "split": split,
                    "seq_id": seq_id,
                    "t": t,
                    "x": [float(v) for v in seq.xs[t]],
                    "y": int(seq.ys[t]),
                }


def _write_ndjson(path: Path, dataset: Dataset) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in _records(dataset):
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def _parse_line(raw: str, line: int) -> dict[str, Any]:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc.msg}", line=line) from exc
    if not isinstance(obj, dict):
        raise DataFormatError("each line must be a JSON object", line=line)
    return obj


def _read_ndjson(path: Path) -> Dataset:
    assembler = _SequenceAssembler()
    m: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            obj = _parse_line(raw, line)
            for key in ("seq_id", "t", "x", "y"):
                if key not in obj:
                    raise DataFormatError(f"missing field '{key}'", line=line)
            x = _as_observation(obj["x"], line, m)
            m = len(x)
            assembler.add(
                str(obj.get("split", "test")),
                _as_int(obj["seq_id"], "seq_id", line),
                _as_int(obj["t"], "t", line),
                x,
                _as_label(obj["y"], line),
                line,
            )
    return assembler.build()


# ---- public API ------------------------------------------------------------

def write_dataset(path: str | Path, dataset: Dataset, fmt: str | None = None) -> None:
    target = Path(path)
    resolved = resolve_format(target, fmt)
    target.parent.mkdir(parents=True, exist_ok=True)
    if resolved == "csv":
        _write_csv(target, dataset)
    else:
        _write_ndjson(target, dataset)
    logger.info("Wrote %d train / %d test sequences to %s", len(dataset.train), len(dataset.test), target)


def read_dataset(path: str | Path, fmt: str | None = None) -> Dataset:
    source = Path(path)
    resolved = resolve_format(source, fmt)
    dataset = _read_csv(source) if resolved == "csv" else _read_ndjson(source)
    logger.info("Read %d train / %d test sequences from %s", len(dataset.train), len(dataset.test), source)
    return dataset


def read_samples(stream: Iterable[str], m: int | None = None) -> Iterator[SampleRecord]:
    """
    Parse NDJSON sample records ``{"t", "x", "y"?}`` lazily, one per line.

    ``t`` must increase strictly; ``x`` must keep one length throughout.
    Non-finite values are passed through for the stream handle to reject.
    """
    last_t: int | None = None
    for line, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        obj = _parse_line(raw, line)
        if "t" not in obj or "x" not in obj:
            raise DataFormatError("sample records need 't' and 'x'", line=line)
        t = _as_int(obj["t"], "t", line)
        if last_t is not None and t <= last_t:
            raise DataFormatError(f"t must be strictly increasing, got {t} after {last_t}", line=line)
        x = _as_observation(obj["x"], line, m, finite=False)
        m = len(x)
        y = obj.get("y")
        yield SampleRecord(t=t, x=x, y=None if y is None else _as_label(y, line))
        last_t = t


def write_verdict(stream: TextIO, verdict: Verdict, t: int | None = None) -> None:
    """One ``{"is_anomaly", "score", "t"}`` line, flushed immediately."""
    record = verdict.to_dict()
    if t is not None:
        record["t"] = t
    stream.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
    stream.write("\n")
    stream.flush()
