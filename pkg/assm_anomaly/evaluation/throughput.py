from __future__ import annotations
import time
from dataclasses import dataclass, asdict
from typing import Any
from orm_loader.helpers import get_logger

from ..errors import ThroughputError
from ..ssm.base import DefaultHyperparameters, SampleFn

logger = get_logger(__name__)


@dataclass(frozen=True)
class ThroughputResult:
    samples: int
    elapsed_ns: int

    @property
    def ns_per_sample(self) -> float:
        return self.elapsed_ns / self.samples

    @property
    def samples_per_second(self) -> float:
        return self.samples * 1e9 / self.elapsed_ns

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["ns_per_sample"] = self.ns_per_sample
        out["samples_per_second"] = self.samples_per_second
        return out


def measure_throughput(
    run: SampleFn,
    n: int,
    *,
    min_samples: int = DefaultHyperparameters.MIN_BENCH_SAMPLES,
) -> ThroughputResult:
    """
    *measure_throughput*

    Time ``n`` consecutive single-sample calls ``run(i)``.

    The first ``n // 10`` calls are a warm-up and excluded from timing; timed
    calls continue the index from there, so ``run`` sees
    ``0 .. n + n // 10 - 1``.

    Raises
    ------
    ThroughputError
        ``n`` is below ``min_samples``, or the timer did not advance.
    """
    if n < min_samples:
        raise ThroughputError(f"need at least {min_samples} samples for stable timing, got {n}")
    warmup = n // 10
    for i in range(warmup):
        run(i)

    start = time.perf_counter_ns()
    for i in range(warmup, warmup + n):
        run(i)
    elapsed = time.perf_counter_ns() - start

    if elapsed <= 0:
        raise ThroughputError("timer resolution too coarse for this sample count")
    result = ThroughputResult(samples=n, elapsed_ns=elapsed)
    logger.info(
        "Throughput: %.0f samples/s (%.1f ns/sample over %d samples)",
        result.samples_per_second, result.ns_per_sample, n,
    )
    return result
