"""
Exception hierarchy.

Every error carries the process exit code the CLI reports for it:
2 validation, 3 numeric divergence, 4 I/O.
"""


class ASSMError(RuntimeError):
    exit_code: int = 1


class ASSMValidationError(ASSMError, ValueError):
    exit_code = 2


class ShapeError(ASSMValidationError):
    pass


class LabelError(ASSMValidationError):
    pass


class EmptyInputError(ASSMValidationError):
    pass


class ConfigError(ASSMValidationError):
    pass


class NonFiniteInputError(ASSMValidationError):
    pass


class ThroughputError(ASSMValidationError):
    pass


class DataFormatError(ASSMValidationError):
    """
    Rejected input file content.

    ``line`` is 1-based and counts the header for CSV files.
    """

    def __init__(self, message: str, *, line: int | None = None, byte: int | None = None):
        self.line = line
        self.byte = byte
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif byte is not None:
            where = f" (byte {byte})"
        super().__init__(f"{message}{where}")


class NumericDivergenceError(ASSMError, ArithmeticError):
    exit_code = 3

    def __init__(self, message: str, *, epoch: int | None = None):
        self.epoch = epoch
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)


class KalmanDegenerateError(NumericDivergenceError):
    pass


class StorageError(ASSMError, OSError):
    exit_code = 4


class CheckpointError(StorageError):
    """Rejected checkpoint file; ``byte`` is the offending offset when known."""

    def __init__(self, message: str, *, byte: int | None = None):
        self.byte = byte
        if byte is not None:
            message = f"{message} (byte {byte})"
        super().__init__(message)


class BadMagicError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


class ChecksumMismatchError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass
