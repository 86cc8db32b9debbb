"""
Versioned binary checkpoint container.

Layout (all integers little-endian)::

    magic        8 bytes   b"ASSMCKPT"
    version      u16
    header_len   u32
    header       header_len bytes of UTF-8 JSON (sorted keys): model config,
                 threshold, metadata and the tensor manifest [[name, shape], ...]
    payload      tensors in manifest order, row-major '<f8'
    checksum     32-byte SHA-256 over every preceding byte

Nothing time-dependent is written, so equal inputs give byte-identical files.
"""
from __future__ import annotations
import hashlib
import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any
import numpy as np
from orm_loader.helpers import get_logger

from ..errors import (
    BadMagicError,
    CheckpointError,
    ChecksumMismatchError,
    TruncatedCheckpointError,
    UnsupportedVersionError,
)
from ..ssm.model import ModelConfig, Parameters, TENSOR_FIELDS

logger = get_logger(__name__)

MAGIC = b"ASSMCKPT"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sHI")
_DIGEST_SIZE = hashlib.sha256().digest_size
_F8 = np.dtype("<f8")


@dataclass(frozen=True, eq=False)
class Checkpoint:
    """
    *Checkpoint*

    A trained model bundle: Parameters (which carry their ModelConfig), the
    calibrated alarm threshold and free-form JSON-safe training metadata.
    """
    params: Parameters
    threshold: float = math.inf
    metadata: dict[str, Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def config(self) -> ModelConfig:
        return self.params.config


def _header(checkpoint: Checkpoint) -> bytes:
    header = {
        "config": checkpoint.config.to_dict(),
        "threshold": float(checkpoint.threshold),
        "metadata": checkpoint.metadata,
        "tensors": [[name, list(shape)] for name, shape in checkpoint.params.shapes.items()],
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    header = _header(checkpoint)
    payload = b"".join(
        np.ascontiguousarray(tensor, dtype=_F8).tobytes(order="C")
        for tensor in checkpoint.params.tensors().values()
    )
    body = _PREFIX.pack(MAGIC, checkpoint.format_version, len(header)) + header + payload
    return body + hashlib.sha256(body).digest()


def decode_checkpoint(blob: bytes) -> Checkpoint:
    """
    Parse a checkpoint, checking in order: magic, version, completeness,
    checksum, manifest.
    """
    if len(blob) < len(MAGIC) or blob[:len(MAGIC)] != MAGIC:
        if len(blob) < len(MAGIC) and MAGIC.startswith(blob):
            raise TruncatedCheckpointError("file ends inside the magic header", byte=len(blob))
        raise BadMagicError("not a checkpoint file: bad magic bytes", byte=0)
    if len(blob) < _PREFIX.size:
        raise TruncatedCheckpointError("file ends inside the fixed header", byte=len(blob))
    _, version, header_len = _PREFIX.unpack_from(blob)
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"checkpoint format version {version} is not supported (expected {FORMAT_VERSION})",
            byte=len(MAGIC),
        )

    header_end = _PREFIX.size + header_len
    if len(blob) < header_end + _DIGEST_SIZE:
        raise TruncatedCheckpointError("file ends before the header is complete", byte=len(blob))
    try:
        header = json.loads(blob[_PREFIX.size:header_end].decode("utf-8"))
        manifest = [(str(name), tuple(int(n) for n in shape)) for name, shape in header["tensors"]]
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        if hashlib.sha256(blob[:-_DIGEST_SIZE]).digest() != blob[-_DIGEST_SIZE:]:
            raise ChecksumMismatchError("checkpoint checksum mismatch") from exc
        raise CheckpointError(f"unreadable checkpoint header: {exc}", byte=_PREFIX.size) from exc

    payload_len = sum(math.prod(shape) for _, shape in manifest) * _F8.itemsize
    expected = header_end + payload_len + _DIGEST_SIZE
    if len(blob) < expected:
        raise TruncatedCheckpointError(
            f"checkpoint is {len(blob)} bytes, expected {expected}", byte=len(blob)
        )
    if len(blob) > expected:
        raise CheckpointError(f"{len(blob) - expected} trailing bytes after checksum", byte=expected)

    body, digest = blob[:-_DIGEST_SIZE], blob[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatchError("checkpoint checksum mismatch", byte=len(body))

    if [name for name, _ in manifest] != list(TENSOR_FIELDS):
        raise CheckpointError(f"unexpected tensor manifest {[n for n, _ in manifest]}", byte=_PREFIX.size)
    tensors: dict[str, np.ndarray] = {}
    offset = header_end
    for name, shape in manifest:
        count = math.prod(shape)
        tensors[name] = np.frombuffer(blob, dtype=_F8, count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += count * _F8.itemsize

    config = ModelConfig.from_mapping(header["config"])
    return Checkpoint(
        params=Parameters(**tensors, config=config),
        threshold=float(header["threshold"]),
        metadata=dict(header.get("metadata", {})),
        format_version=version,
    )


def save_checkpoint(path: str | Path, checkpoint: Checkpoint) -> None:
    """Write atomically: a temporary file in the target directory is renamed into place."""
    target = Path(path)
    blob = encode_checkpoint(checkpoint)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.info("Checkpoint written to %s (%d bytes)", target, len(blob))


def load_checkpoint(path: str | Path) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    checkpoint = decode_checkpoint(blob)
    logger.info("Checkpoint loaded from %s", path)
    return checkpoint
