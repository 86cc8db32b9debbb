"""
Full-scale synthetic comparison of the trained model against the Kalman
baseline. Opt-in through ASSM_RUN_SLOW=1.
"""
import numpy as np
import pytest

from assm_anomaly.datagen import GenConfig, generate_dataset
from assm_anomaly.evaluation import evaluate_scores
from assm_anomaly.ssm.baselines import constant_velocity_model
from assm_anomaly.ssm.handlers import detector_registry
from assm_anomaly.ssm.model import ModelConfig
from assm_anomaly.ssm.training import TrainConfig, calibrate_threshold, train

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def comparison():
    gen = GenConfig(n_train=2_000, n_test=500, seed=0)
    data = generate_dataset(gen)
    params, _ = train(ModelConfig(input_dim=1, state_dim=16, seed=0), TrainConfig(epochs=20, seed=0), data.train)
    registry = detector_registry(params, constant_velocity_model(1, gen.noise_std))
    train_scores = registry.score_all(s.xs for s in data.train)
    test_scores = registry.score_all(s.xs for s in data.test)
    train_labels = np.concatenate([s.ys for s in data.train])
    results = {}
    for name in registry.names():
        threshold, _ = calibrate_threshold(np.concatenate(train_scores[name]), train_labels)
        results[name] = evaluate_scores(test_scores[name], [s.ys for s in data.test], threshold, horizon=25)
    return results


def test_trained_model_ranks_spikes_well(comparison):
    assert comparison["assm"].roc_auc >= 0.90


def test_trained_model_beats_kalman_f1(comparison):
    assert comparison["assm"].f1 > comparison["kf"].f1


@pytest.mark.xfail(
    strict=True,
    reason="the Kalman baseline already ranks spikes at ROC-AUC ~0.96, so a 0.05 margin exceeds 1.0",
)
def test_trained_model_roc_auc_margin_over_kalman(comparison):
    assert comparison["assm"].roc_auc >= comparison["kf"].roc_auc + 0.05


def test_trained_model_detects_no_later_than_kalman_baseline(comparison):
    assm, kf = comparison["assm"], comparison["kf"]
    assert assm.mean_latency is not None
    assert kf.mean_latency is None or assm.mean_latency <= kf.mean_latency
