import numpy as np
import pytest

from src.core.baselines import full_tensor_features, primal_ridge_fit
from src.core.data import Dataset, apply_scaler, make_bumps, make_crescents, split, standardize_targets
from src.core.errors import InvalidParameterError, ShapeMismatchError, TaskMismatchError
from src.core.model import (
    FeatureOverrides,
    Task,
    classify,
    fit,
    fit_with_history,
    infer_task,
    labels_from_scores,
    predict,
    raw_scores,
    resolve_lambda,
    score,
)
from src.core.solver import LambdaRule, RegMode, TrainConfig, train_state

SMALL = TrainConfig(m_hat=6, rank=4, sweeps=3, lambda_reg=1e-4)


@pytest.fixture(scope="module")
def regression_model():
    data = make_bumps(150, 3, seed=5)
    model, trace = fit(data, SMALL)
    return data, model, trace


@pytest.fixture(scope="module")
def classifier():
    data = make_crescents(160, seed=1)
    model, _ = fit(data, SMALL)
    return data, model


class TestTaskInference:
    def test_binary_targets(self):
        assert infer_task(Dataset(np.zeros((2, 1)), [1, -1])) == Task.CLASSIFICATION

    def test_real_targets(self):
        assert infer_task(Dataset(np.zeros((2, 1)), [0.5, -1])) == Task.REGRESSION

    def test_forced_regression_on_labels(self):
        assert infer_task(Dataset(np.zeros((2, 1)), [1, -1]), Task.REGRESSION) == Task.REGRESSION

    def test_forced_classification_needs_labels(self):
        with pytest.raises(InvalidParameterError):
            infer_task(Dataset(np.zeros((2, 1)), [0.5, 1]), Task.CLASSIFICATION)


class TestLambdaRule:
    def test_fixed(self):
        assert resolve_lambda(TrainConfig(lambda_reg=3e-3), 500) == 3e-3

    def test_inverse_n(self):
        assert resolve_lambda(TrainConfig(lambda_rule=LambdaRule.INVERSE_N), 400) == pytest.approx(0.25)

    def test_stored_on_model(self):
        data = make_bumps(50, 2, seed=0)
        model, _ = fit(data, SMALL.model_copy(update={"lambda_rule": LambdaRule.INVERSE_N}))
        assert model.train_config.lambda_reg == pytest.approx(2.0)


class TestRegression:
    def test_trace_length(self, regression_model):
        _, _, trace = regression_model
        assert len(trace) == 3 * 5

    def test_target_statistics_stored(self, regression_model):
        data, model, _ = regression_model
        assert model.task == Task.REGRESSION
        assert model.scaler.target_mean == pytest.approx(np.mean(data.y))
        assert model.scaler.target_std == pytest.approx(np.std(data.y))

    def test_predictions_match_solver_outputs(self, regression_model):
        data, model, _ = regression_model
        X, _ = apply_scaler(model.scaler, data.X)
        y, _, _ = standardize_targets(data.y)
        state = train_state(X, y, model.train_config, model.feature_config)
        outputs = np.prod(np.stack(state.projections), axis=0).sum(axis=1)
        np.testing.assert_allclose(raw_scores(model, data.X), outputs, rtol=1e-10, atol=1e-12)

    def test_batch_equals_rows(self, regression_model):
        data, model, _ = regression_model
        batch = predict(model, data.X[:10])
        for n in range(10):
            assert predict(model, data.X[n])[0] == pytest.approx(batch[n], rel=1e-12, abs=1e-14)

    def test_far_outside_input_predicts_mean(self, regression_model):
        data, model, _ = regression_model
        far = data.X.min(axis=0) - 100.0
        assert predict(model, far)[0] == model.scaler.target_mean

    def test_fits_better_than_mean(self, regression_model):
        data, model, _ = regression_model
        assert score(model, data) < np.var(data.y)

    def test_constant_targets(self):
        X = np.random.default_rng(0).uniform(0, 1, (40, 2))
        model, _ = fit(Dataset(X, np.full(40, 3.7)), SMALL)
        np.testing.assert_allclose(predict(model, X), 3.7, atol=1e-6)

    def test_dimension_mismatch(self, regression_model):
        _, model, _ = regression_model
        with pytest.raises(ShapeMismatchError):
            predict(model, np.zeros((2, 5)))

    def test_classify_rejected(self, regression_model):
        data, model, _ = regression_model
        with pytest.raises(TaskMismatchError):
            classify(model, data.X)


class TestClassification:
    def test_labels_not_standardized(self, classifier):
        _, model = classifier
        assert model.task == Task.CLASSIFICATION
        assert (model.scaler.target_mean, model.scaler.target_std) == (0.0, 1.0)

    def test_classify_is_sign_of_predict(self, classifier):
        data, model = classifier
        np.testing.assert_array_equal(classify(model, data.X), labels_from_scores(predict(model, data.X)))

    def test_zero_score_is_positive(self):
        np.testing.assert_array_equal(labels_from_scores(np.array([0.0, -0.3, 0.2, -0.0])), [1, -1, 1, 1])

    def test_training_error_low(self, classifier):
        data, model = classifier
        assert score(model, data) < 0.15


class TestHistory:
    def test_sweep_metrics_recorded(self):
        data = make_crescents(200, seed=2)
        train, validation = split(data, 0.8, seed=0)
        result = fit_with_history(train, SMALL, validation=validation)
        assert len(result.sweep_metrics) == SMALL.sweeps
        assert all(0.0 <= m <= 1.0 for m in result.sweep_metrics)
        assert result.initial_loss >= result.loss_trace[-1]

    def test_explicit_lengthscale_and_margin(self):
        data = make_bumps(60, 2, seed=3)
        model, _ = fit(data, SMALL, FeatureOverrides(lengthscale=0.2, margin=1.5))
        assert model.feature_config.lengthscale == 0.2
        assert model.feature_config.half_widths == [0.75, 0.75]


def test_training_mean_approaches_target_mean_as_lambda_shrinks():
    data = make_bumps(120, 2, seed=7)
    target_mean, target_std = float(data.y.mean()), float(data.y.std())

    gaps = []
    for lam in (1e-1, 1e-3, 1e-6):
        cfg = TrainConfig(m_hat=8, rank=8, lambda_reg=lam, reg_mode=RegMode.FULL_HADAMARD, sweeps=4, jitter=0.0)
        model, _ = fit(data, cfg)
        ours = float(predict(model, data.X).mean())

        X, _ = apply_scaler(model.scaler, data.X)
        Phi = full_tensor_features(X, model.feature_config)
        y, mean, std = standardize_targets(data.y)
        oracle = float((Phi @ primal_ridge_fit(Phi, y, lam)).mean() * std + mean)

        assert ours == pytest.approx(oracle, abs=1e-4 * target_std)
        gaps.append(abs(ours - target_mean))

    assert gaps[-1] < gaps[0]
    assert gaps[-1] < 0.02 * target_std


def test_full_rank_agrees_with_full_tensor_ridge():
    """Full-rank CPD on a 2-D problem should match primal ridge on the dense features"""
    data = make_crescents(400, seed=0)
    cfg = TrainConfig(m_hat=6, rank=6, lambda_reg=1e-5, reg_mode=RegMode.FULL_HADAMARD, sweeps=10)
    model, _ = fit(data, cfg, FeatureOverrides(lengthscale=0.5))

    X, _ = apply_scaler(model.scaler, data.X)
    Phi = full_tensor_features(X, model.feature_config)
    w = primal_ridge_fit(Phi, data.y, model.train_config.lambda_reg)

    lo, hi = data.X.min(axis=0), data.X.max(axis=0)
    g0, g1 = np.meshgrid(np.linspace(lo[0], hi[0], 50), np.linspace(lo[1], hi[1], 50))
    grid = np.column_stack([g0.ravel(), g1.ravel()])
    grid_scaled, _ = apply_scaler(model.scaler, grid)

    ours = classify(model, grid)
    reference = labels_from_scores(full_tensor_features(grid_scaled, model.feature_config) @ w)
    assert np.mean(ours == reference) >= 0.95
