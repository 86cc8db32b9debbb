"""
Synthetic benchmark: noisy sinusoids with random per-sequence amplitude,
frequency and phase, and single-step spike anomalies with full labels.
"""
from __future__ import annotations
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Any, Literal, Mapping
import numpy as np
from orm_loader.helpers import get_logger

from ..config import check_known_keys
from ..errors import ConfigError, ShapeError
from ..ssm.training import LabeledSequence

logger = get_logger(__name__)

Split = Literal["train", "test"]
SPLITS: tuple[Split, ...] = ("train", "test")

Interval = tuple[float, float]


def _interval(name: str, value: Any) -> Interval:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a (low, high) pair, got {value!r}") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ConfigError(f"{name} must satisfy low <= high, got ({lo}, {hi})")
    return lo, hi


@dataclass(frozen=True)
class GenConfig:
    """
    *GenConfig*

    Recipe for the synthetic spike dataset.

    Parameters
    ----------
    n_train, n_test : int
        Number of sequences per split.
    seq_len : int
        Steps per sequence.
    spike_prob : float
        Per-step probability of a spike.
    amp_range, freq_range : (float, float)
        Uniform ranges for the sinusoid amplitude and frequency (cycles/step).
    noise_std : float
        Standard deviation of the additive Gaussian noise.
    spike_magnitude_range : (float, float)
        Spike size as a multiple of the channel amplitude.
    seed : int
        64-bit unsigned seed; train and test draw from independent sub-streams.
    channels : int
        Observation dimension m. Channels are independent sinusoids; a spike
        lands on one of them.
    workers : int
        Threads generating sequences. Output does not depend on it.
    """
    n_train: int = 10_000
    n_test: int = 2_000
    seq_len: int = 100
    spike_prob: float = 0.05
    amp_range: Interval = (0.5, 2.0)
    freq_range: Interval = (0.02, 0.1)
    noise_std: float = 0.05
    spike_magnitude_range: Interval = (3.0, 6.0)
    seed: int = 0
    channels: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("n_train", "n_test", "seq_len", "channels", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not 0.0 <= self.spike_prob <= 1.0:
            raise ConfigError(f"spike_prob must lie in [0, 1], got {self.spike_prob}")
        if not self.noise_std >= 0.0:
            raise ConfigError(f"noise_std must be nonnegative, got {self.noise_std}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        for name in ("amp_range", "freq_range", "spike_magnitude_range"):
            object.__setattr__(self, name, _interval(name, getattr(self, name)))

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> GenConfig:
        check_known_keys("generate", values, set(cls.__dataclass_fields__))
        return cls(**values)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for name in ("amp_range", "freq_range", "spike_magnitude_range"):
            out[name] = list(out[name])
        return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Train and test splits of labelled sequences. ``config`` is the recipe that
    produced them, or None when the splits were read from a file.
    """
    train: tuple[LabeledSequence, ...]
    test: tuple[LabeledSequence, ...]
    config: GenConfig | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "test", tuple(self.test))
        dims = {s.input_dim for s in self.train + self.test}
        if len(dims) > 1:
            raise ShapeError(f"dataset mixes observation dimensions {sorted(dims)}")
        if self.config is not None:
            if (len(self.train), len(self.test)) != (self.config.n_train, self.config.n_test):
                raise ShapeError("split sizes disagree with the generating config")
            if any(s.length != self.config.seq_len for s in self.train + self.test):
                raise ShapeError(f"every sequence must have length {self.config.seq_len}")

    @property
    def input_dim(self) -> int | None:
        for seq in self.train + self.test:
            return seq.input_dim
        return None

    def split(self, name: Split) -> tuple[LabeledSequence, ...]:
        if name not in SPLITS:
            raise KeyError(f"Unknown split '{name}'. Available splits: {list(SPLITS)}")
        return self.train if name == "train" else self.test

    def __len__(self) -> int:
        return len(self.train) + len(self.test)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.train == other.train and self.test == other.test

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"<Dataset train={len(self.train)} test={len(self.test)} m={self.input_dim}>"


def sequence_rng(seed: int, split: Split, index: int) -> np.random.Generator:
    """Generator for one sequence: independent per (seed, split, index)."""
    key = (SPLITS.index(split), index)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def generate_sequence(config: GenConfig, rng: np.random.Generator) -> LabeledSequence:
    """
    *generate_sequence*

    One labelled sequence drawn from ``rng``.

    Per channel: amplitude ``a``, frequency ``w`` and phase ``phi`` are uniform
    and ``x_t = a sin(2 pi w t + phi) + N(0, noise_std^2)``. Each step is
    independently a spike with probability ``spike_prob``: one channel gets
    ``+/- u * a`` with ``u`` uniform in ``spike_magnitude_range`` and the step
    is labelled 1. The number of draws does not depend on the outcome, so the
    stream consumed per sequence is fixed.
    """
    T, m = config.seq_len, config.channels
    t = np.arange(T, dtype=np.float64)

    amp = rng.uniform(*config.amp_range, size=m)
    freq = rng.uniform(*config.freq_range, size=m)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=m)
    xs = amp * np.sin(2.0 * math.pi * freq * t[:, None] + phase)
    xs += rng.normal(0.0, config.noise_std, size=(T, m))

    spikes = rng.random(T) < config.spike_prob
    magnitude = rng.uniform(*config.spike_magnitude_range, size=T)
    sign = np.where(rng.random(T) < 0.5, -1.0, 1.0)
    channel = rng.integers(0, m, size=T)

    rows = np.flatnonzero(spikes)
    cols = channel[rows]
    xs[rows, cols] += sign[rows] * magnitude[rows] * amp[cols]
    return LabeledSequence(xs=xs, ys=spikes.astype(np.int8))


def _generate_split(config: GenConfig, split: Split, count: int) -> tuple[LabeledSequence, ...]:
    def one(index: int) -> LabeledSequence:
        return generate_sequence(config, sequence_rng(config.seed, split, index))

    if config.workers == 1:
        return tuple(one(i) for i in range(count))
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return tuple(pool.map(one, range(count)))


def generate_dataset(config: GenConfig) -> Dataset:
    """Both splits, deterministic in ``config`` and independent of ``workers``."""
    logger.info(
        "Generating %d train / %d test sequences (T=%d, m=%d, spike_prob=%g, seed=%d)",
        config.n_train, config.n_test, config.seq_len, config.channels, config.spike_prob, config.seed,
    )
    return Dataset(
        train=_generate_split(config, "train", config.n_train),
        test=_generate_split(config, "test", config.n_test),
        config=config,
    )
