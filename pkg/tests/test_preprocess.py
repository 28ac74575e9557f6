import numpy as np
import pytest

from dkfbench.errors import AlignmentError, InsufficientDataError, RankError, ValidationError
from dkfbench.preprocess import (
    ProcessedTrial,
    SpikeEvents,
    VelocitySeries,
    bin_spike_counts,
    moving_sum,
    paired_downsample,
    pca_zscore,
    preprocess_trial,
)


def uniform_velocity(duration, spacing, values=None):
    ts = np.arange(0.0, duration, spacing)
    if values is None:
        values = np.zeros((len(ts), 2))
    return VelocitySeries(ts, values)


class TestBinSpikeCounts:
    def test_basic(self):
        ev = SpikeEvents([[0.05, 0.15]])
        np.testing.assert_array_equal(
            bin_spike_counts(ev, 0.1, 0.0, 0.2), [[1], [1]]
        )

    def test_no_spikes(self):
        ev = SpikeEvents([[], []])
        np.testing.assert_array_equal(
            bin_spike_counts(ev, 0.1, 0.0, 0.3), np.zeros((3, 2), dtype=int)
        )

    def test_boundary_goes_to_upper_bin(self):
        ev = SpikeEvents([[0.0999999, 0.1]])
        np.testing.assert_array_equal(bin_spike_counts(ev, 0.1, 0.0, 0.2), [[1], [1]])

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            bin_spike_counts(SpikeEvents([[0.1]]), 0.1, 1.0, 1.0)

    def test_direct_binning_equals_fine_bin_sums(self):
        # 100 ms counts from events match summed 33 us bins, exactly.
        rng = np.random.default_rng(0)
        fine = 1.0 / 30000.0
        for _ in range(100):
            n_neurons = rng.integers(1, 4)
            duration = 2.0
            events = SpikeEvents(
                [np.sort(rng.uniform(0, duration, rng.integers(0, 300))) for _ in range(n_neurons)]
            )
            coarse = bin_spike_counts(events, 0.1, 0.0, duration)
            fine_counts = bin_spike_counts(events, fine, 0.0, duration)
            per = int(round(0.1 / fine))
            summed = fine_counts[: coarse.shape[0] * per].reshape(coarse.shape[0], per, -1).sum(axis=1)
            np.testing.assert_array_equal(coarse, summed)


class TestMovingSum:
    def test_all_ones_window_10(self):
        out = moving_sum(np.ones(15), 10)
        np.testing.assert_array_equal(out, [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 10, 10, 10, 10, 10])

    def test_window_one_is_identity(self):
        x = np.arange(12.0).reshape(6, 2)
        np.testing.assert_array_equal(moving_sum(x, 1), x)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(50, 3))
        out = moving_sum(x, 10)
        for t in range(50):
            expected = x[max(0, t - 9): t + 1].sum(axis=0)
            np.testing.assert_allclose(out[t], expected, atol=1e-12)

    def test_full_window_sum_exact(self):
        rng = np.random.default_rng(2)
        x = rng.integers(0, 10, size=(40, 2))
        out = moving_sum(x, 7)
        for t in range(6, 40):
            np.testing.assert_array_equal(out[t], x[t - 6: t + 1].sum(axis=0))

    def test_centered_mode(self):
        x = np.ones(20)
        out = moving_sum(x, 10, mode="centered")
        # interior entries cover (t-5 .. t+4)
        assert out[10] == 10
        assert out[0] == 5  # clipped low edge: indices 0..4

    def test_zero_window_rejected(self):
        with pytest.raises(ValueError):
            moving_sum(np.ones(5), 0)


class TestPairedDownsample:
    def test_summation(self):
        fine = 1.0 / 30000.0
        per = 3000
        counts = np.ones((per * 3, 1), dtype=int)
        vel = uniform_velocity(0.3, 0.01)
        coarse, v = paired_downsample(counts, vel, target=0.1, fine_width=fine)
        np.testing.assert_array_equal(coarse, [[per], [per], [per]])
        assert v.shape == (3, 2)

    def test_constant_velocity_stays_constant(self):
        fine = 0.001
        counts = np.zeros((300, 2), dtype=int)
        vals = np.tile([1.5, -2.0], (300, 1))
        vel = VelocitySeries(np.arange(300) * fine, vals)
        _, v = paired_downsample(counts, vel, target=0.1, fine_width=fine)
        np.testing.assert_allclose(v, np.tile([1.5, -2.0], (3, 1)))

    def test_ramp_velocity_midpoint(self):
        fine = 0.001
        ts = np.arange(100) * fine
        vel = VelocitySeries(ts, np.column_stack([ts, ts]))
        counts = np.zeros((100, 1), dtype=int)
        _, v = paired_downsample(counts, vel, target=0.1, fine_width=fine)
        assert abs(v[0, 0] - 0.05) <= fine

    def test_span_mismatch_rejected(self):
        counts = np.zeros((1000, 1), dtype=int)  # 1 s at 1 ms
        vel = uniform_velocity(0.5, 0.01)  # only 0.5 s
        with pytest.raises(AlignmentError):
            paired_downsample(counts, vel, target=0.1, fine_width=0.001)


class TestPcaZscore:
    def test_standardized_columns(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(200, 2)) * np.array([2.0, 1.0])
        out = pca_zscore(x, k=2)
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.std(axis=0, ddof=1), 1.0, atol=1e-9)

    def test_columns_uncorrelated(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(300, 8))
        out = pca_zscore(x, k=4)
        corr = np.corrcoef(out, rowvar=False)
        off = corr - np.diag(np.diag(corr))
        assert np.abs(off).max() < 1e-8

    def test_duplicated_columns_same_scores_up_to_sign(self):
        rng = np.random.default_rng(5)
        base = rng.normal(size=(120, 3)) @ np.diag([3.0, 2.0, 1.0])
        out_a = pca_zscore(base, k=3)
        out_b = pca_zscore(np.hstack([base, base]), k=3)
        for j in range(3):
            same = np.allclose(out_a[:, j], out_b[:, j], atol=1e-8)
            flipped = np.allclose(out_a[:, j], -out_b[:, j], atol=1e-8)
            assert same or flipped

    def test_constant_column_ignored(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(100, 4))
        with_const = np.hstack([x, np.full((100, 1), 7.0)])
        out_a = pca_zscore(x, k=3)
        out_b = pca_zscore(with_const, k=3)
        for j in range(3):
            assert np.allclose(out_a[:, j], out_b[:, j], atol=1e-8) or np.allclose(
                out_a[:, j], -out_b[:, j], atol=1e-8
            )

    def test_rank_error(self):
        x = np.outer(np.arange(20.0), [1.0, 2.0, 3.0])  # rank 1
        with pytest.raises(RankError):
            pca_zscore(x, k=2)

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            pca_zscore(np.ones((3, 5)), k=4)


def synth_inputs(duration, n_neurons=12, seed=0, vel_step=0.01):
    rng = np.random.default_rng(seed)
    ts = np.arange(0.0, duration, vel_step)
    vals = np.cumsum(rng.normal(size=(len(ts), 2)), axis=0) * 0.01
    vel = VelocitySeries(ts, vals)
    events = SpikeEvents(
        [np.sort(rng.uniform(0.0, duration, rng.integers(200, 400) * max(1, int(duration / 10))))
         for _ in range(n_neurons)]
    )
    return events, vel


class TestPreprocessTrial:
    def test_shapes_700s(self):
        events, vel = synth_inputs(700.0)
        trial = preprocess_trial(events, vel, trial_id="t1")
        assert trial.observations.shape == (7000, 10)
        assert trial.latents.shape == (7000, 2)

    def test_paper_scale_10_minutes(self):
        events, vel = synth_inputs(600.0, seed=1)
        trial = preprocess_trial(events, vel)
        assert trial.length == 6000

    def test_insufficient_data(self):
        events, vel = synth_inputs(300.0, seed=2)
        with pytest.raises(InsufficientDataError) as err:
            preprocess_trial(events, vel)
        assert err.value.actual == 3000

    def test_deterministic(self):
        events, vel = synth_inputs(650.0, seed=3)
        a = preprocess_trial(events, vel)
        b = preprocess_trial(events, vel)
        np.testing.assert_array_equal(a.observations, b.observations)
        np.testing.assert_array_equal(a.latents, b.latents)

    def test_processed_invariants(self):
        events, vel = synth_inputs(620.0, seed=4)
        trial = preprocess_trial(events, vel)
        np.testing.assert_allclose(trial.observations.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(trial.observations.std(axis=0, ddof=1), 1.0, atol=1e-9)


class TestTypes:
    def test_spike_events_reject_unsorted(self):
        with pytest.raises(ValidationError):
            SpikeEvents([[0.2, 0.1]])

    def test_spike_events_reject_negative(self):
        with pytest.raises(ValidationError):
            SpikeEvents([[-0.1, 0.2]])

    def test_velocity_series_rejects_irregular_grid(self):
        ts = np.array([0.0, 0.01, 0.03, 0.04])
        with pytest.raises(ValidationError):
            VelocitySeries(ts, np.zeros((4, 2)))

    def test_processed_trial_length_mismatch(self):
        with pytest.raises(ValidationError):
            ProcessedTrial(np.zeros((5, 3)), np.zeros((4, 2)), 0.1, "x")
