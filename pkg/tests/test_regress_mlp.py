import numpy as np
import pytest

from dkfbench.errors import FitDivergedError
from dkfbench.regress import MlpModel, TrainConfig, mlp_fit, mlp_init, mlp_jacobian, mlp_predict
from dkfbench.regress.mlp import _loss_and_grads


def finite_diff_jacobian(model, x, eps=1e-6):
    n_out = model.n_outputs
    jac = np.zeros((n_out, len(x)))
    for j in range(len(x)):
        hi, lo = x.copy(), x.copy()
        hi[j] += eps
        lo[j] -= eps
        jac[:, j] = (mlp_predict(model, hi) - mlp_predict(model, lo)) / (2 * eps)
    return jac


class TestPredict:
    def test_zero_parameters_give_zero(self):
        model = mlp_init(4, 2, seed=0)
        for w in model.weights:
            w[:] = 0.0
        np.testing.assert_array_equal(mlp_predict(model, np.ones(4)), np.zeros(2))

    def test_tanh_saturation(self):
        model = MlpModel(
            weights=[np.ones((3, 2)), np.ones((3, 3)), np.ones((1, 3))],
            biases=[np.zeros(3), np.zeros(3), np.zeros(1)],
        )
        out = mlp_predict(model, np.array([50.0, 50.0]))
        # hidden activations saturate to 1; second layer sees tanh(3) ~ 0.995
        assert out[0] == pytest.approx(3 * np.tanh(3.0), abs=1e-3)

    def test_batch_matches_single(self):
        model = mlp_init(5, 2, seed=1)
        rng = np.random.default_rng(1)
        xs = rng.normal(size=(6, 5))
        batch = mlp_predict(model, xs)
        for i, x in enumerate(xs):
            np.testing.assert_allclose(batch[i], mlp_predict(model, x))


class TestJacobian:
    def test_zero_weights(self):
        model = mlp_init(3, 2, seed=0)
        for w in model.weights:
            w[:] = 0.0
        np.testing.assert_array_equal(mlp_jacobian(model, np.ones(3)), np.zeros((2, 3)))

    def test_scalar_chain_at_zero(self):
        model = MlpModel(
            weights=[np.array([[1.0]]), np.array([[1.0]]), np.array([[1.0]])],
            biases=[np.zeros(1), np.zeros(1), np.zeros(1)],
        )
        assert mlp_jacobian(model, np.zeros(1))[0, 0] == pytest.approx(1.0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        model = mlp_init(6, 2, seed=3)
        for _ in range(5):
            x = rng.normal(size=6)
            analytic = mlp_jacobian(model, x)
            numeric = finite_diff_jacobian(model, x)
            err = np.abs(analytic - numeric).max() / max(np.abs(numeric).max(), 1e-12)
            assert err < 1e-5


class TestTrainingGradients:
    def test_parameter_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        model = mlp_init(3, 2, hidden=(4, 4), seed=5)
        x = rng.normal(size=(8, 3))
        y = rng.normal(size=(8, 2))
        _, gw, gb = _loss_and_grads(model, x, y, l2=1e-3)
        step = 1e-5
        for layer in range(3):
            for arrs, grads in ((model.weights, gw), (model.biases, gb)):
                arr = arrs[layer]
                flat_idx = [tuple(i) for i in np.ndindex(arr.shape)][:6]
                for idx in flat_idx:
                    orig = arr[idx]
                    arr[idx] = orig + step
                    hi, _, _ = _loss_and_grads(model, x, y, 1e-3)
                    arr[idx] = orig - step
                    lo, _, _ = _loss_and_grads(model, x, y, 1e-3)
                    arr[idx] = orig
                    numeric = (hi - lo) / (2 * step)
                    denom = max(abs(numeric), 1e-8)
                    assert abs(grads[layer][idx] - numeric) / denom < 1e-4


class TestFit:
    def test_loss_decreases_toward_zero_map(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(100, 4))
        y = np.zeros((100, 2))
        cfg = TrainConfig(epochs=200, l2_penalty=0.0, seed=7)
        initial = mlp_init(4, 2, seed=7)
        loss0, _, _ = _loss_and_grads(initial, x, y, 0.0)
        model = mlp_fit(x, y, cfg)
        loss1, _, _ = _loss_and_grads(model, x, y, 0.0)
        assert loss1 < loss0

    def test_learns_linear_map(self):
        rng = np.random.default_rng(8)
        w = rng.normal(size=(2, 10)) * 0.5
        x = rng.normal(size=(3500, 10))
        y = x @ w.T
        model = mlp_fit(x, y, TrainConfig(epochs=4000, seed=9))
        pred = mlp_predict(model, x)
        nrmse = np.sqrt(np.sum((pred - y) ** 2) / np.sum(y**2))
        assert nrmse < 0.1

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(50, 3))
        y = rng.normal(size=(50, 2))
        cfg = TrainConfig(epochs=50, seed=11)
        a = mlp_fit(x, y, cfg)
        b = mlp_fit(x, y, cfg)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)
        for ba, bb in zip(a.biases, b.biases):
            np.testing.assert_array_equal(ba, bb)

    def test_divergence_reports_epoch(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(20, 2))
        y = rng.normal(size=(20, 1)) * 1e200  # squared error overflows
        with np.errstate(over="ignore"), pytest.raises(FitDivergedError) as err:
            mlp_fit(x, y, TrainConfig(epochs=10, seed=13))
        assert err.value.epoch >= 0
