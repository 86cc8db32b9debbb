from enum import Enum


class Activation(str, Enum):
    """Elementwise activation applied to the gate inside the state update."""
    TANH = "tanh"
    IDENTITY = "identity"


class Distance(str, Enum):
    """Distance between an observation and its reconstruction."""
    L2 = "l2"
    SQUARED_L2 = "squared-l2"


class DefaultHyperparameters:
    ALPHA = 1.0
    LEARNING_RATE = 1e-3
    EPOCHS = 20
    BPTT_WINDOW = 100
    BATCH_SIZE = 32
    GRAD_CLIP = 5.0
    GRAD_CHUNK = 8
    DETECTION_HORIZON = 25
    INIT_SPECTRAL_RADIUS = 0.9
    MIN_BENCH_SAMPLES = 10_000
