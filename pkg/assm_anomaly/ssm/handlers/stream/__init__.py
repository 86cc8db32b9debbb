from .ring_buffer import RingBuffer
from .engine import StreamConfig, StreamHandle, Verdict, open_stream, push, bench

__all__ = [
    "RingBuffer",
    "StreamConfig",
    "StreamHandle",
    "Verdict",
    "open_stream",
    "push",
    "bench",
]
