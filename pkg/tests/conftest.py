import os
import pytest
import numpy as np

from assm_anomaly.datagen import GenConfig, generate_dataset
from assm_anomaly.ssm.model import ModelConfig, Parameters, init_parameters
from assm_anomaly.ssm.training import LabeledSequence


def pytest_collection_modifyitems(config, items):
    """
    Full-scale experiments and wall-clock measurements are opt-in:
    ASSM_RUN_SLOW=1 and ASSM_RUN_PERF=1 respectively.
    """
    gates = {
        "slow": os.getenv("ASSM_RUN_SLOW") == "1",
        "perf": os.getenv("ASSM_RUN_PERF") == "1",
    }
    for item in items:
        for marker, enabled in gates.items():
            if marker in item.keywords and not enabled:
                item.add_marker(pytest.mark.skip(reason=f"set ASSM_RUN_{marker.upper()}=1 to run"))


@pytest.fixture(scope="session")
def small_config() -> ModelConfig:
    return ModelConfig(input_dim=2, state_dim=4, seed=7)


@pytest.fixture(scope="session")
def small_params(small_config) -> Parameters:
    """
    Session-scoped parameters; Parameters are immutable so sharing is safe.
    """
    return init_parameters(small_config)


@pytest.fixture(scope="session")
def scalar_params() -> Parameters:
    return init_parameters(ModelConfig(input_dim=1, state_dim=3, seed=11))


@pytest.fixture(scope="session")
def tiny_gen_config() -> GenConfig:
    return GenConfig(n_train=12, n_test=6, seq_len=40, spike_prob=0.1, seed=3)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_gen_config):
    return generate_dataset(tiny_gen_config)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def make_sequence(rng: np.random.Generator, T: int, m: int, p: float = 0.2) -> LabeledSequence:
    xs = rng.standard_normal((T, m))
    ys = (rng.random(T) < p).astype(np.int8)
    return LabeledSequence(xs=xs, ys=ys)


@pytest.fixture
def sequence_factory(rng):
    def factory(T: int = 10, m: int = 2, p: float = 0.2) -> LabeledSequence:
        return make_sequence(rng, T, m, p)
    return factory
