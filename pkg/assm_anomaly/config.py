import os
from dotenv import load_dotenv
from pathlib import Path
from typing import Any, Mapping
import numpy as np
import yaml
from orm_loader.helpers import get_logger

from .errors import ConfigError


RUN_CONFIG_SECTIONS = ("model", "train", "generate", "stream", "kalman", "eval")

# sub-stream labels fanned out from the single --seed flag
SEED_LABELS = ("model", "train", "generate", "bench")

logger = get_logger(__name__)

def load_environment(dotenv: str = '') -> None:
    """
    Explicitly load environment variables for the application.
    Safe: does not log sensitive values.
    """
    if load_dotenv(dotenv) or load_dotenv():
        logger.info("Environment variables loaded from .env file")
    else:
        logger.debug("No .env file loaded")


def get_default_seed(fallback: int = 0) -> int:
    """
    Resolve the pipeline seed from ``ASSM_SEED``, falling back to ``fallback``.
    """
    raw = os.getenv("ASSM_SEED")
    if raw is None:
        return fallback
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ConfigError(f"ASSM_SEED must be an integer, got {raw!r}") from exc
    if seed < 0 or seed >= 2**64:
        raise ConfigError(f"ASSM_SEED out of range for a 64-bit unsigned seed: {seed}")
    return seed


def derive_seed(seed: int, label: str) -> int:
    """
    Derive a labelled 64-bit sub-seed from the pipeline seed.

    Labels map to fixed spawn keys, so the same ``(seed, label)`` always yields
    the same sub-seed and different labels give independent streams.
    """
    if label not in SEED_LABELS:
        raise ConfigError(f"Unknown seed label '{label}'. Known labels: {list(SEED_LABELS)}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(SEED_LABELS.index(label),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def load_run_config(path: str | Path | None = None) -> dict[str, dict[str, Any]]:
    """
    Load the textual key-value run configuration.

    Resolution order:
    1. explicit ``path``
    2. ``ASSM_CONFIG`` environment variable
    3. no file: every section empty (dataclass defaults apply)

    The YAML document holds one mapping per section (``model``, ``train``,
    ``generate``, ``stream``, ``kalman``, ``eval``). Unknown sections are rejected;
    key validation happens when each section is fed to its config dataclass.
    """
    if path is None:
        env_path = os.getenv("ASSM_CONFIG")
        if env_path:
            logger.info("Run configuration resolved from ASSM_CONFIG")
            path = env_path

    sections: dict[str, dict[str, Any]] = {name: {} for name in RUN_CONFIG_SECTIONS}
    if path is None:
        logger.debug("No run configuration file; using defaults")
        return sections

    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"Could not parse config file {path}: {exc}") from exc

    if raw is None:
        return sections
    if not isinstance(raw, Mapping):
        raise ConfigError(f"Config file {path} must contain a mapping of sections")

    for name, values in raw.items():
        if name not in sections:
            raise ConfigError(
                f"Unknown config section '{name}'. "
                f"Available sections: {list(RUN_CONFIG_SECTIONS)}"
            )
        if values is None:
            continue
        if not isinstance(values, Mapping):
            raise ConfigError(f"Config section '{name}' must be a mapping")
        sections[name] = dict(values)

    logger.info("Run configuration loaded from %s", path)
    return sections


def check_known_keys(kind: str, values: Mapping[str, Any], known: set[str]) -> None:
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(
            f"Unknown {kind} option(s): {unknown}. Known options: {sorted(known)}"
        )
