import numpy as np
import pytest

from dkfbench.errors import UnstableSystemError
from dkfbench.filters import StateSpaceParams, kf_fit
from dkfbench.linalg import pseudo_inverse
from dkfbench.preprocess import bin_spike_counts
from dkfbench.synth import (
    LgssSpec,
    TuningSpec,
    exact_posterior_moments,
    gen_cosine_tuning,
    gen_lgss,
    random_stable_system,
    sample_spike_events,
    stationary_cov,
    tuning_rates,
)


class TestStationaryCov:
    def test_zero_transition(self):
        g = np.array([[1.0, 0.2], [0.2, 2.0]])
        np.testing.assert_allclose(stationary_cov(np.zeros((2, 2)), g), g)

    def test_scalar_hand_solve(self):
        assert stationary_cov([[0.5]], [[0.75]])[0, 0] == pytest.approx(1.0)

    def test_residual(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(2, 2))
        a *= 0.8 / np.abs(np.linalg.eigvals(a)).max()
        w = rng.normal(size=(2, 2))
        g = w @ w.T + 0.1 * np.eye(2)
        s = stationary_cov(a, g)
        assert np.linalg.norm(s - a @ s @ a.T - g) < 1e-10

    def test_unstable_rejected(self):
        with pytest.raises(UnstableSystemError):
            stationary_cov([[1.01]], [[1.0]])


class TestGenLgss:
    def test_noise_free_deterministic_trajectory(self):
        a = np.array([[0.9, 0.1], [0.0, 0.8]])
        h = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        params = StateSpaceParams(A=a, G=1e-30 * np.eye(2), H=h, R=1e-30 * np.eye(3))
        z0 = np.array([1.0, -1.0])
        data = gen_lgss(LgssSpec(params, length=20, seed=0, init_state=z0))
        z = z0
        for i in range(20):
            z = a @ z
            np.testing.assert_allclose(data.latents[i], z, atol=1e-12)
            np.testing.assert_allclose(data.observations[i], h @ z, atol=1e-12)

    def test_sample_covariance_near_stationary(self):
        params = random_stable_system(1, d=2, p=3)
        data = gen_lgss(LgssSpec(params, length=1_000_000, seed=2))
        sample = np.cov(data.latents, rowvar=False, ddof=1)
        rel = np.linalg.norm(sample - params.S) / np.linalg.norm(params.S)
        assert rel < 0.02

    def test_same_seed_identical(self):
        params = random_stable_system(3)
        a = gen_lgss(LgssSpec(params, length=100, seed=4))
        b = gen_lgss(LgssSpec(params, length=100, seed=4))
        np.testing.assert_array_equal(a.latents, b.latents)
        np.testing.assert_array_equal(a.observations, b.observations)

    def test_kf_fit_roundtrip_recovers_dynamics(self):
        params = random_stable_system(5, d=2, p=4)
        data = gen_lgss(LgssSpec(params, length=20000, seed=6))
        fit = kf_fit(data.latents, data.observations)
        assert np.linalg.norm(fit.A - params.A) < 0.05
        assert np.linalg.norm(fit.H - params.H) < 0.05


class TestExactPosteriorMoments:
    def test_zero_observation_matrix(self):
        s = np.array([[1.5, 0.2], [0.2, 1.0]])
        params = StateSpaceParams(A=np.eye(2), G=np.eye(2), H=np.zeros((3, 2)),
                                  R=np.eye(3), S=s)
        coef, q = exact_posterior_moments(params)
        np.testing.assert_array_equal(coef, np.zeros((2, 3)))
        np.testing.assert_allclose(q, s)

    def test_noise_free_invertible_limit(self):
        h = np.array([[2.0, 1.0], [0.5, -1.0]])
        params = StateSpaceParams(A=np.eye(2), G=np.eye(2), H=h,
                                  R=1e-12 * np.eye(2), S=np.eye(2))
        coef, q = exact_posterior_moments(params)
        np.testing.assert_allclose(coef, np.linalg.inv(h), atol=1e-9)
        assert np.abs(q).max() < 1e-9

    def test_scalar_hand_computation(self):
        params = StateSpaceParams(A=[[1.0]], G=[[1.0]], H=[[1.0]], R=[[1.0]], S=[[1.0]])
        coef, q = exact_posterior_moments(params)
        assert coef[0, 0] == pytest.approx(0.5)
        assert q[0, 0] == pytest.approx(0.5)

    def test_information_form_identity(self):
        for seed in range(100):
            params = random_stable_system(seed, d=2, p=4)
            _, q = exact_posterior_moments(params)
            lhs = pseudo_inverse(q)
            rhs = pseudo_inverse(params.S) + params.H.T @ np.linalg.solve(params.R, params.H)
            assert np.abs(lhs - rhs).max() / np.abs(rhs).max() < 1e-10


class TestCosineTuning:
    def test_zero_modulation_counts_independent_of_velocity(self):
        spec = TuningSpec(neuron_count=3, modulation=0.0, baseline_rate=8.0,
                          gain_std=0.0, length=100_000, seed=7)
        data = gen_cosine_tuning(spec)
        counts = bin_spike_counts(data.spikes, 0.1, 0.0, spec.length * 0.1)
        vel = data.velocities.values[5::10][: len(counts)]  # per-bin midpoints
        for n in range(3):
            for k in range(2):
                rho = np.corrcoef(counts[:, n], vel[:, k])[0, 1]
                assert abs(rho) < 0.02

    def test_rate_at_preferred_direction(self):
        spec = TuningSpec(neuron_count=4, baseline_rate=0.0, modulation=1.0, seed=8)
        direction = spec.directions()[1]
        z = 2.0 * direction
        duration = 10_000.0
        steps = int(duration / spec.velocity_step)
        rates = tuning_rates(spec, np.tile(z, (steps, 1)))
        assert rates[0, 1] == pytest.approx(2.0)
        rng = np.random.default_rng(9)
        events = sample_spike_events(rates, spec.velocity_step, rng)
        rate_hat = len(events.events[1]) / duration
        assert abs(rate_hat - 2.0) <= 3.0 * np.sqrt(2.0 / duration)

    def test_same_seed_identical_events(self):
        spec = TuningSpec(neuron_count=5, length=200, seed=10)
        a = gen_cosine_tuning(spec)
        b = gen_cosine_tuning(spec)
        for ea, eb in zip(a.spikes.events, b.spikes.events):
            np.testing.assert_array_equal(ea, eb)
        np.testing.assert_array_equal(a.velocities.values, b.velocities.values)

    def test_nonnegative_rates(self):
        spec = TuningSpec(neuron_count=6, baseline_rate=1.0, modulation=20.0, seed=11)
        rng = np.random.default_rng(12)
        rates = tuning_rates(spec, rng.normal(size=(500, 2)), rng)
        assert rates.min() >= 0.0
