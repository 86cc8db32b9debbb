from .registry import AssmScorer, KalmanScorer, DetectorRegistry, detector_registry
from .stream import StreamConfig, StreamHandle, Verdict, RingBuffer, open_stream, push, bench

__all__ = [
    "AssmScorer",
    "KalmanScorer",
    "DetectorRegistry",
    "detector_registry",
    "StreamConfig",
    "StreamHandle",
    "Verdict",
    "RingBuffer",
    "open_stream",
    "push",
    "bench",
]
