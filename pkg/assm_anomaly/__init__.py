from .config import load_environment, load_run_config, derive_seed, get_default_seed
from .errors import ASSMError, ASSMValidationError, NumericDivergenceError, StorageError


__all__ = [
    "load_environment",
    "load_run_config",
    "derive_seed",
    "get_default_seed",
    "ASSMError",
    "ASSMValidationError",
    "NumericDivergenceError",
    "StorageError",
]
