import numpy as np
import pytest

from assm_anomaly.ssm.baselines import constant_velocity_model, kf_run
from assm_anomaly.ssm.handlers import AssmScorer, DetectorRegistry, KalmanScorer, detector_registry
from assm_anomaly.ssm.model import score_sequence


@pytest.fixture
def registry(scalar_params):
    return detector_registry(scalar_params, constant_velocity_model(1, 0.05))


def test_registry_holds_both_methods(registry):
    assert registry.names() == ["assm", "kf"]
    assert "assm" in registry
    assert "lstm" not in registry
    assert len(registry) == 2


def test_registry_builds_lazily_and_caches():
    built = []
    registry = DetectorRegistry()

    def builder():
        built.append(1)
        return KalmanScorer(constant_velocity_model(1, 0.1))

    registry.register("kf", builder)
    assert built == []
    first = registry["kf"]
    assert registry.get("kf") is first
    assert built == [1]


def test_registry_rejects_duplicates_and_unknown_names(registry):
    with pytest.raises(KeyError):
        registry.register("assm", lambda: None)
    with pytest.raises(KeyError, match="Available detectors"):
        registry.get("isolation-forest")


def test_registry_rejects_non_scorers():
    registry = DetectorRegistry()
    registry.register("broken", lambda: object())
    with pytest.raises(TypeError):
        registry.get("broken")


def test_score_all_matches_direct_calls(registry, scalar_params, rng):
    seqs = [rng.standard_normal((20, 1)) for _ in range(3)]
    traces = registry.score_all(seqs)
    assert list(traces) == ["assm", "kf"]
    for xs, got in zip(seqs, traces["assm"]):
        assert np.array_equal(got, score_sequence(scalar_params, xs))
    model = registry["kf"].model
    for xs, got in zip(seqs, traces["kf"]):
        assert np.array_equal(got, kf_run(model, xs))


def test_scorers_carry_names(scalar_params):
    assert AssmScorer(scalar_params).name == "assm"
    assert KalmanScorer(constant_velocity_model(1, 0.1), name="kf-slow").name == "kf-slow"


def test_scorers_satisfy_the_scorer_protocol(scalar_params):
    from assm_anomaly.ssm import base

    assert isinstance(AssmScorer(scalar_params), base.SequenceScorer)
    assert isinstance(KalmanScorer(constant_velocity_model(1, 0.1)), base.SequenceScorer)
    assert set(base.__all__) <= set(dir(base))
