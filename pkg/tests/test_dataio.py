import numpy as np
import pytest

from dkfbench import dataio
from dkfbench.errors import ParseError, ValidationError
from dkfbench.evaluate import MethodResult
from dkfbench.filters import BeliefSequence
from dkfbench.preprocess import ProcessedTrial, SpikeEvents, VelocitySeries
from dkfbench.synth import TuningSpec, gen_cosine_tuning


class TestIngest:
    def test_minimal_spike_file(self, tmp_path):
        spikes = tmp_path / "spikes.csv"
        spikes.write_text("0,0.05\n0,0.15\n")
        vel = tmp_path / "vel.csv"
        vel.write_text("0.0,1.0,2.0\n0.01,1.0,2.0\n0.02,1.0,2.0\n")
        events, velocities = dataio.ingest(vel, spikes)
        assert events.neuron_count == 1
        np.testing.assert_allclose(events.events[0], [0.05, 0.15])
        assert len(velocities.timestamps) == 3

    def test_irregular_velocity_grid_rejected(self, tmp_path):
        spikes = tmp_path / "spikes.csv"
        spikes.write_text("0,0.05\n")
        vel = tmp_path / "vel.csv"
        vel.write_text("0.0,1.0,2.0\n0.01,1.0,2.0\n0.03,1.0,2.0\n")  # 2x gap
        with pytest.raises(ValidationError):
            dataio.ingest(vel, spikes)

    def test_unsorted_spikes_rejected(self, tmp_path):
        spikes = tmp_path / "spikes.csv"
        spikes.write_text("0,0.15\n0,0.05\n")
        vel = tmp_path / "vel.csv"
        vel.write_text("0.0,1.0,2.0\n0.01,1.0,2.0\n")
        with pytest.raises(ValidationError):
            dataio.ingest(vel, spikes)

    def test_malformed_row_reports_line(self, tmp_path):
        spikes = tmp_path / "spikes.csv"
        spikes.write_text("0,0.05\nnot-a-number\n")
        vel = tmp_path / "vel.csv"
        vel.write_text("0.0,1.0,2.0\n0.01,1.0,2.0\n")
        with pytest.raises(ParseError, match="line 2"):
            dataio.ingest(vel, spikes)

    def test_roundtrip_from_generator(self, tmp_path):
        data = gen_cosine_tuning(TuningSpec(neuron_count=4, length=20, seed=3))
        spikes_path = tmp_path / "spikes.csv"
        vel_path = tmp_path / "vel.csv"
        dataio.write_spikes_csv(spikes_path, data.spikes)
        dataio.write_velocity_csv(vel_path, data.velocities)
        events, velocities = dataio.ingest(vel_path, spikes_path)
        assert events.neuron_count == data.spikes.neuron_count
        for a, b in zip(events.events, data.spikes.events):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(velocities.timestamps, data.velocities.timestamps)
        np.testing.assert_array_equal(velocities.values, data.velocities.values)


class TestProcessedTrialFiles:
    def test_roundtrip_with_header(self, tmp_path):
        rng = np.random.default_rng(0)
        trial = ProcessedTrial(rng.normal(size=(50, 10)), rng.normal(size=(50, 2)), 0.1, "t7")
        obs, lat = tmp_path / "obs.csv", tmp_path / "lat.csv"
        dataio.write_processed_trial(trial, obs, lat)
        first = obs.read_text().splitlines()[0]
        assert first == "# dkf-bench processed v1, trial=t7, bin_ms=100"
        loaded = dataio.read_processed_trial(obs, lat)
        assert loaded.trial_id == "t7"
        assert loaded.bin_width == 0.1
        np.testing.assert_array_equal(loaded.observations, trial.observations)
        np.testing.assert_array_equal(loaded.latents, trial.latents)

    def test_header_mismatch_rejected(self, tmp_path):
        rng = np.random.default_rng(1)
        a = ProcessedTrial(rng.normal(size=(5, 3)), rng.normal(size=(5, 2)), 0.1, "a")
        b = ProcessedTrial(rng.normal(size=(5, 3)), rng.normal(size=(5, 2)), 0.1, "b")
        dataio.write_processed_trial(a, tmp_path / "ao.csv", tmp_path / "al.csv")
        dataio.write_processed_trial(b, tmp_path / "bo.csv", tmp_path / "bl.csv")
        with pytest.raises(ValidationError):
            dataio.read_processed_trial(tmp_path / "ao.csv", tmp_path / "bl.csv")

    def test_missing_header_rejected(self, tmp_path):
        (tmp_path / "obs.csv").write_text("1.0,2.0\n")
        (tmp_path / "lat.csv").write_text("1.0,2.0\n")
        with pytest.raises(ParseError):
            dataio.read_processed_trial(tmp_path / "obs.csv", tmp_path / "lat.csv")


class TestBeliefFiles:
    def test_roundtrip_means_only(self, tmp_path):
        rng = np.random.default_rng(2)
        seq = BeliefSequence(rng.normal(size=(10, 2)), rng.normal(size=(10, 2, 2)))
        path = tmp_path / "beliefs.csv"
        dataio.write_beliefs_csv(path, seq)
        assert path.read_text().splitlines()[0] == "t,mu_1,mu_2"
        loaded = dataio.read_beliefs_csv(path)
        np.testing.assert_array_equal(loaded.means, seq.means)

    def test_roundtrip_with_covariance(self, tmp_path):
        rng = np.random.default_rng(3)
        covs = np.array([np.diag([1.0, 2.0]) + 0.1 * i for i in range(5)])
        seq = BeliefSequence(rng.normal(size=(5, 2)), covs)
        path = tmp_path / "beliefs.csv"
        dataio.write_beliefs_csv(path, seq, include_cov=True)
        loaded = dataio.read_beliefs_csv(path)
        np.testing.assert_array_equal(loaded.covs, covs)


class TestResultsFiles:
    def test_roundtrip(self, tmp_path):
        results = [
            MethodResult("1", 0, "kalman", False, 0.8, 0.9, 1.5),
            MethodResult("1", 0, "nw", True, float("nan"), 0.7, 2.5, status="nrmse-undefined"),
        ]
        path = tmp_path / "results.csv"
        dataio.write_results_csv(path, results)
        loaded = dataio.read_results_csv(path)
        assert loaded[0].method == "kalman"
        assert loaded[0].nrmse == 0.8
        assert np.isnan(loaded[1].nrmse)
        assert loaded[1].dkf_applied
        assert loaded[1].status == "nrmse-undefined"

    def test_deterministic_bytes(self, tmp_path):
        results = [MethodResult("1", 0, "kalman", False, 1 / 3, 2 / 3, 0.0)]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        dataio.write_results_csv(a, results)
        dataio.write_results_csv(b, results)
        assert a.read_bytes() == b.read_bytes()
