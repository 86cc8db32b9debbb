import math
import numpy as np
import pytest

from assm_anomaly.errors import (
    ASSMValidationError,
    ConfigError,
    EmptyInputError,
    LabelError,
    NonFiniteInputError,
    NumericDivergenceError,
    ShapeError,
)
from assm_anomaly.evaluation import f1_score
from assm_anomaly.ssm.model import Gradients, ModelConfig, Parameters, init_parameters
from assm_anomaly.ssm.training import (
    LabeledSequence,
    TrainConfig,
    TrainReport,
    backward,
    batch_gradient,
    calibrate_on,
    calibrate_threshold,
    candidate_thresholds,
    clip_gradients,
    finite_difference_gradient,
    relu_margin,
    total_loss,
    train,
)


def _rel_err(a: Gradients, b: Gradients) -> float:
    va, vb = a.to_vector(), b.to_vector()
    return float(np.linalg.norm(va - vb) / max(np.linalg.norm(va), np.linalg.norm(vb), 1e-12))


def _scalar_toy(a: float) -> Parameters:
    """d = m = 1, B = 1, C = D = E = 0, W_f = 1: h_t = a h_{t-1} + x_t."""
    return Parameters(
        A=[[a]], B=[[1.0]], C=[[0.0]], D=[[0.0]], E=[[0.0]],
        gamma=1.0, W_f=[[1.0]], b_f=[0.0], w_s=1.0, b_s=0.0,
        config=ModelConfig(input_dim=1, state_dim=1),
    )


def _perturbed(params: Parameters, rng: np.random.Generator) -> Parameters:
    # move the scalar heads off their defaults so every tensor has a live gradient
    tensors = params.tensors()
    tensors["gamma"] = np.float64(rng.uniform(0.5, 1.5))
    tensors["w_s"] = np.float64(rng.uniform(0.5, 1.5))
    tensors["b_s"] = np.float64(rng.uniform(-1.0, 1.0))
    tensors["b_f"] = rng.uniform(-0.1, 0.1, size=params.input_dim)
    return params.with_tensors(tensors)


# ---- loss ------------------------------------------------------------------

def test_loss_on_zero_input_is_pure_classification(scalar_params):
    T = 10
    seq = LabeledSequence(xs=np.zeros((T, 1)), ys=np.zeros(T, dtype=np.int8))
    terms = total_loss(scalar_params, seq, alpha=1.0)
    assert terms.recon == 0.0
    assert terms.classification == pytest.approx(T * math.log(2.0), rel=1e-12)
    assert terms.total == pytest.approx(T * math.log(2.0), rel=1e-12)


def test_loss_decomposition(small_params, sequence_factory):
    seq = sequence_factory(T=20)
    for alpha in (0.0, 0.5, 2.0):
        terms = total_loss(small_params, seq, alpha)
        assert terms.total == pytest.approx(terms.recon + alpha * terms.classification, rel=1e-12)
        assert terms.recon >= 0.0
        assert terms.classification >= 0.0


def test_loss_nondecreasing_in_alpha(small_params, sequence_factory):
    seq = sequence_factory(T=15)
    totals = [total_loss(small_params, seq, a).total for a in (0.0, 0.1, 1.0, 10.0)]
    assert totals == sorted(totals)


def test_loss_rejects_negative_alpha(small_params, sequence_factory):
    with pytest.raises(ASSMValidationError):
        total_loss(small_params, sequence_factory(), -1.0)


def test_masked_reconstruction_ignores_anomalous_steps(small_params, sequence_factory):
    seq = sequence_factory(T=20, p=0.5)
    plain = total_loss(small_params, seq, 1.0)
    masked = total_loss(small_params, seq, 1.0, mask_anomalous_recon=True)
    assert masked.recon <= plain.recon
    assert masked.classification == plain.classification


def test_labeled_sequence_validation():
    with pytest.raises(LabelError):
        LabeledSequence(xs=np.zeros((3, 1)), ys=[0, 2, 0])
    with pytest.raises(ShapeError):
        LabeledSequence(xs=np.zeros((3, 1)), ys=[0, 1])
    with pytest.raises(NonFiniteInputError):
        LabeledSequence(xs=[[0.0], [np.nan]], ys=[0, 0])
    with pytest.raises(EmptyInputError):
        LabeledSequence(xs=[], ys=[])


# ---- gradients -------------------------------------------------------------

def _tensor_errors(a: Gradients, b: Gradients) -> dict[str, float]:
    errors = {}
    for (name, ga), (_, gb) in zip(a.items(), b.items()):
        scale = max(np.linalg.norm(ga) + np.linalg.norm(gb), 1e-5)
        errors[name] = float(np.linalg.norm(ga - gb) / scale)
    return errors


def test_gradient_matches_finite_differences_per_tensor(rng):
    accepted = 0
    for seed in range(400):
        d, m, T = int(rng.integers(1, 5)), int(rng.integers(1, 3)), int(rng.integers(2, 13))
        params = _perturbed(init_parameters(ModelConfig(input_dim=m, state_dim=d, seed=seed)), rng)
        seq = LabeledSequence(
            xs=rng.standard_normal((T, m)),
            ys=(rng.random(T) < 0.3).astype(np.int8),
        )
        if relu_margin(params, seq) <= 1e-3:
            continue
        analytic = backward(params, seq, 1.0, bptt_window=100)
        numeric = finite_difference_gradient(params, seq, 1.0, 1e-5)
        worst = max(_tensor_errors(analytic, numeric).items(), key=lambda kv: kv[1])
        assert worst[1] <= 1e-4, f"seed {seed} d={d} m={m} T={T}: {worst}"
        accepted += 1
        if accepted == 20:
            break
    assert accepted == 20


def test_gradient_with_squared_distance_and_identity(rng):
    checked = 0
    for seed in range(50):
        config = ModelConfig(input_dim=1, state_dim=2, activation="identity", distance="squared-l2", seed=seed)
        params = _perturbed(init_parameters(config), rng)
        seq = LabeledSequence(xs=rng.standard_normal((6, 1)), ys=[0, 1, 0, 0, 1, 0])
        if relu_margin(params, seq) <= 1e-3:
            continue
        assert _rel_err(backward(params, seq, 0.7, 100), finite_difference_gradient(params, seq, 0.7, 1e-6)) < 1e-4
        checked += 1
        if checked == 5:
            break
    assert checked == 5


def test_gradient_from_nonzero_initial_state(small_params, rng):
    from assm_anomaly.ssm.model import HiddenState

    seq = LabeledSequence(xs=rng.standard_normal((5, 2)), ys=[0, 0, 1, 0, 0])
    start = HiddenState(h=rng.standard_normal(4), x_prev=rng.standard_normal(2), t=17)
    analytic = backward(small_params, seq, 1.0, 100, initial_state=start)
    numeric = finite_difference_gradient(small_params, seq, 1.0, 1e-6, initial_state=start)
    assert _rel_err(analytic, numeric) < 1e-4


def test_quadratic_toy_gradient():
    for a in (-0.5, 0.3, 0.9):
        for x1 in (-2.0, 0.5, 1.5):
            seq = LabeledSequence(xs=[[x1], [0.7]], ys=[0, 0])
            grads = backward(_scalar_toy(a), seq, alpha=0.0, bptt_window=100)
            assert grads.A[0, 0] == pytest.approx(2.0 * a * x1**2, rel=1e-12, abs=1e-15)
            assert total_loss(_scalar_toy(a), seq, 0.0).total == pytest.approx(a**2 * x1**2, rel=1e-12)


def test_dead_gate_path_has_zero_gradient(sequence_factory):
    base = init_parameters(ModelConfig(input_dim=2, state_dim=3, seed=1))
    tensors = base.tensors()
    tensors.update(gamma=np.float64(0.0), D=np.zeros((3, 3)), E=np.zeros((3, 2)))
    params = base.with_tensors(tensors)
    grads = backward(params, sequence_factory(T=12), 1.0, 100)
    assert np.array_equal(grads.D, np.zeros((3, 3)))
    assert np.array_equal(grads.E, np.zeros((3, 2)))
    assert grads.gamma == 0.0


def test_window_longer_than_sequence_is_inert(small_params, sequence_factory):
    seq = sequence_factory(T=12)
    full = backward(small_params, seq, 1.0, bptt_window=12)
    assert backward(small_params, seq, 1.0, bptt_window=13) == full
    assert backward(small_params, seq, 1.0, bptt_window=1000) == full


def test_short_window_truncates_gradient(small_params, sequence_factory):
    seq = sequence_factory(T=12)
    assert backward(small_params, seq, 1.0, bptt_window=3) != backward(small_params, seq, 1.0, bptt_window=12)


def test_central_difference_error_shrinks_quadratically(rng):
    params = None
    for seed in range(100):
        candidate = _perturbed(init_parameters(ModelConfig(input_dim=1, state_dim=2, seed=seed)), rng)
        seq = LabeledSequence(xs=rng.standard_normal((6, 1)), ys=[0, 0, 1, 0, 0, 0])
        if relu_margin(candidate, seq) > 0.1:
            params = candidate
            break
    assert params is not None
    analytic = backward(params, seq, 1.0, 100).to_vector()
    coarse = finite_difference_gradient(params, seq, 1.0, 1e-2).to_vector()
    fine = finite_difference_gradient(params, seq, 1.0, 5e-3).to_vector()
    ratio = np.linalg.norm(coarse - analytic) / np.linalg.norm(fine - analytic)
    assert 2.5 < ratio < 5.5


def test_finite_difference_rejects_bad_epsilon(small_params, sequence_factory):
    with pytest.raises(ASSMValidationError):
        finite_difference_gradient(small_params, sequence_factory(), 1.0, 0.0)


# ---- optimiser -------------------------------------------------------------

def test_clip_gradients(small_params, sequence_factory):
    grads = backward(small_params, sequence_factory(T=30), 1.0, 100)
    clipped = clip_gradients(grads, 0.5 * grads.norm())
    assert clipped.norm() == pytest.approx(0.5 * grads.norm(), rel=1e-12)
    assert clip_gradients(grads, 2.0 * grads.norm()) is grads
    with pytest.raises(ConfigError):
        clip_gradients(grads, 0.0)


def test_batch_gradient_is_mean(small_params, sequence_factory):
    batch = [sequence_factory(T=10) for _ in range(3)]
    tconfig = TrainConfig(alpha=1.0)
    mean, losses = batch_gradient(small_params, batch, tconfig)
    expected = sum(backward(small_params, s, 1.0, tconfig.bptt_window).to_vector() for s in batch) / 3
    np.testing.assert_allclose(mean.to_vector(), expected, rtol=1e-10, atol=1e-14)
    assert losses.total == pytest.approx(np.mean([total_loss(small_params, s, 1.0).total for s in batch]))


def test_zero_learning_rate_leaves_parameters(tiny_dataset):
    config = ModelConfig(input_dim=1, state_dim=4, seed=2)
    params, report = train(config, TrainConfig(learning_rate=0.0, epochs=2, batch_size=4), tiny_dataset.train)
    assert params == init_parameters(config)
    assert report.epochs == 2
    assert report.total_losses[0] == pytest.approx(report.total_losses[1], rel=1e-12)


def test_training_is_deterministic(tiny_dataset):
    config = ModelConfig(input_dim=1, state_dim=4, seed=2)
    tconfig = TrainConfig(epochs=2, batch_size=5, learning_rate=1e-2, seed=9)
    p1, r1 = train(config, tconfig, tiny_dataset.train)
    p2, r2 = train(config, tconfig, tiny_dataset.train)
    assert p1 == p2
    assert r1 == r2


def test_training_ignores_worker_count(tiny_dataset):
    config = ModelConfig(input_dim=1, state_dim=4, seed=2)
    serial = TrainConfig(epochs=2, batch_size=12, learning_rate=1e-2, workers=1)
    threaded = TrainConfig(epochs=2, batch_size=12, learning_rate=1e-2, workers=3)
    assert train(config, serial, tiny_dataset.train)[0] == train(config, threaded, tiny_dataset.train)[0]


def test_training_reduces_loss(tiny_dataset):
    config = ModelConfig(input_dim=1, state_dim=8, seed=0)
    _, report = train(config, TrainConfig(epochs=8, batch_size=4, learning_rate=5e-3), tiny_dataset.train)
    assert report.total_losses[-1] < report.total_losses[0]
    assert report.threshold_f1 >= 0.0
    assert "epoch_seconds" not in report.to_dict()
    assert len(report.to_dict(include_timing=True)["epoch_seconds"]) == 8


def test_divergence_reports_epoch():
    config = ModelConfig(input_dim=1, state_dim=2, seed=0)
    data = [LabeledSequence(xs=np.full((5, 1), 1e200), ys=np.zeros(5, dtype=np.int8))]
    with np.errstate(all="ignore"):
        with pytest.raises(NumericDivergenceError) as info:
            train(config, TrainConfig(epochs=3), data)
    assert info.value.epoch == 0
    assert "epoch 0" in str(info.value)


def test_train_rejects_bad_datasets():
    config = ModelConfig(input_dim=2, state_dim=2)
    with pytest.raises(EmptyInputError):
        train(config, TrainConfig(epochs=1), [])
    with pytest.raises(ShapeError):
        train(config, TrainConfig(epochs=1), [LabeledSequence(xs=np.zeros((4, 1)), ys=np.zeros(4))])


@pytest.mark.parametrize("bad", [{"alpha": -0.1}, {"epochs": 0}, {"grad_clip": 0.0}, {"bptt_window": 0}, {"workers": 0}])
def test_train_config_validation(bad):
    with pytest.raises(ConfigError):
        TrainConfig(**bad)


def test_train_report_equality_ignores_timing():
    a = TrainReport(total_losses=[1.0], recon_losses=[0.5], class_losses=[0.5], epoch_seconds=[0.1])
    b = TrainReport(total_losses=[1.0], recon_losses=[0.5], class_losses=[0.5], epoch_seconds=[9.0])
    assert a == b


# ---- threshold calibration -------------------------------------------------

def test_candidate_thresholds():
    cands = candidate_thresholds(np.array([0.1, 0.4, 0.4, 0.8]))
    assert cands[0] == math.inf
    assert cands[-1] == -math.inf
    assert cands[1:-1].tolist() == pytest.approx([0.6, 0.25])


def test_calibration_example():
    result = calibrate_threshold([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert result.threshold == pytest.approx(0.225)
    assert result.f1 == pytest.approx(0.8)


def test_calibration_separable_data_reaches_one():
    result = calibrate_threshold([0.1, 0.2, 0.9, 0.95], [0, 0, 1, 1])
    assert result.f1 == 1.0
    assert 0.2 < result.threshold < 0.9


def test_calibration_matches_brute_force(rng):
    for _ in range(50):
        n = int(rng.integers(2, 40))
        scores = np.round(rng.random(n), 1)  # ties on purpose
        labels = (rng.random(n) < 0.3).astype(np.int8)
        if not labels.any():
            labels[0] = 1
        best_th, best_f1 = None, -1.0
        for th in candidate_thresholds(scores):
            f1 = f1_score(scores > th, labels)
            if f1 > best_f1:
                best_th, best_f1 = th, f1
        result = calibrate_threshold(scores, labels)
        assert result.f1 == pytest.approx(best_f1, abs=1e-12)
        assert result.threshold == best_th


def test_calibration_rejects_degenerate_input():
    with pytest.raises(LabelError):
        calibrate_threshold([0.1, 0.2], [0, 0])
    with pytest.raises(EmptyInputError):
        calibrate_threshold([], [])
    with pytest.raises(NonFiniteInputError):
        calibrate_threshold([0.1, np.nan], [0, 1])


def test_calibrate_on_without_positives_disables_alarms(small_params, rng):
    data = [LabeledSequence(xs=rng.standard_normal((5, 2)), ys=np.zeros(5, dtype=np.int8))]
    assert calibrate_on(small_params, data) == (math.inf, 0.0)


def test_calibration_two_point_and_all_positive():
    split = calibrate_threshold([0.1, 0.9], [0, 1])
    assert split.threshold == pytest.approx(0.5)
    assert split.f1 == 1.0
    everything = calibrate_threshold([0.3, 0.5], [1, 1])
    assert everything.threshold == -math.inf
    assert everything.f1 == 1.0


@pytest.mark.slow
def test_default_model_training_reduces_loss():
    from assm_anomaly.datagen import GenConfig, generate_dataset

    data = generate_dataset(GenConfig(n_train=256, n_test=16, seed=0))
    _, report = train(ModelConfig(input_dim=1, state_dim=16, seed=0), TrainConfig(epochs=5), data.train)
    assert report.total_losses[-1] < report.total_losses[0]
