"""CSV readers and writers for every on-disk format.

Formats:

* spikes CSV: ``neuron_id,time_s`` rows sorted by neuron then time.
* velocity CSV: ``time_s,vx,vy`` rows on a uniform time grid.
* processed trial: two CSVs (observations, latents), each starting with the
  one-line header ``# dkf-bench processed v1, trial=<id>, bin_ms=<n>``.
* filter output: ``t,mu_1,mu_2`` plus optional covariance columns.
* results: ``trial,seed,method,dkf_applied,nrmse,maae,runtime_s,status``.

Floats are written with repr (shortest round-trip), so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError, ValidationError
from .evaluate import MethodResult
from .filters import BeliefSequence
from .preprocess import PROCESSED_FORMAT_TAG, ProcessedTrial, SpikeEvents, VelocitySeries

__all__ = [
    "ingest",
    "write_spikes_csv",
    "write_velocity_csv",
    "write_processed_trial",
    "read_processed_trial",
    "write_beliefs_csv",
    "read_beliefs_csv",
    "write_results_csv",
    "read_results_csv",
]


def _fmt(v: float) -> str:
    return repr(float(v))


def write_spikes_csv(path, spikes: SpikeEvents) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("neuron_id,time_s\n")
        for n, times in enumerate(spikes.events):
            for t in times:
                fh.write(f"{n},{_fmt(t)}\n")


def write_velocity_csv(path, velocities: VelocitySeries) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("time_s,vx,vy\n")
        for t, (vx, vy) in zip(velocities.timestamps, velocities.values):
            fh.write(f"{_fmt(t)},{_fmt(vx)},{_fmt(vy)}\n")


def _parse_rows(path, n_fields: int, skip_header: str | None):
    rows = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if lineno == 1 and skip_header and line.startswith(skip_header.split(",")[0]):
                continue
            parts = line.split(",")
            if len(parts) != n_fields:
                raise ParseError(f"{path}: line {lineno}: expected {n_fields} fields, "
                                 f"got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
    return np.asarray(rows, dtype=float)


def ingest(velocity_csv, spikes_csv) -> tuple[SpikeEvents, VelocitySeries]:
    """Parse and validate the raw ingestion pair."""
    vel_rows = _parse_rows(velocity_csv, 3, "time_s")
    if len(vel_rows) < 2:
        raise ValidationError(f"{velocity_csv}: need at least two velocity samples")
    velocities = VelocitySeries(vel_rows[:, 0], vel_rows[:, 1:])

    spike_rows = _parse_rows(spikes_csv, 2, "neuron_id")
    if len(spike_rows):
        ids = spike_rows[:, 0]
        if (ids != np.round(ids)).any() or ids.min() < 0:
            raise ValidationError(f"{spikes_csv}: neuron ids must be nonnegative integers")
        n_neurons = int(ids.max()) + 1
        events = [spike_rows[ids == n, 1] for n in range(n_neurons)]
    else:
        events = [np.empty(0)]
    for n, times in enumerate(events):
        if len(times) > 1 and (np.diff(times) < 0).any():
            raise ValidationError(f"{spikes_csv}: neuron {n}: spike times not sorted")
    return SpikeEvents(events), velocities


def _processed_header(trial: ProcessedTrial) -> str:
    bin_ms = int(round(trial.bin_width * 1000))
    return f"# {PROCESSED_FORMAT_TAG}, trial={trial.trial_id}, bin_ms={bin_ms}"


def write_processed_trial(trial: ProcessedTrial, observations_path, latents_path) -> None:
    header = _processed_header(trial)
    for path, data in ((observations_path, trial.observations), (latents_path, trial.latents)):
        with open(path, "w", encoding="ascii") as fh:
            fh.write(header + "\n")
            for row in data:
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def _read_processed_file(path):
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith(f"# {PROCESSED_FORMAT_TAG}"):
            raise ParseError(f"{path}: missing '{PROCESSED_FORMAT_TAG}' header")
        meta = {}
        for part in header.split(",")[1:]:
            key, _, value = part.strip().partition("=")
            meta[key] = value
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(p) for p in line.split(",")])
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
    return meta, np.asarray(rows, dtype=float)


def read_processed_trial(observations_path, latents_path) -> ProcessedTrial:
    meta_obs, observations = _read_processed_file(observations_path)
    meta_lat, latents = _read_processed_file(latents_path)
    if meta_obs != meta_lat:
        raise ValidationError(
            f"headers disagree: {observations_path} has {meta_obs}, {latents_path} has {meta_lat}"
        )
    bin_width = float(meta_obs.get("bin_ms", "100")) / 1000.0
    return ProcessedTrial(observations, latents, bin_width, meta_obs.get("trial", "trial"))


def write_beliefs_csv(path, beliefs: BeliefSequence, include_cov: bool = False) -> None:
    d = beliefs.means.shape[1]
    cols = ["t", *[f"mu_{i + 1}" for i in range(d)]]
    iu = np.triu_indices(d)
    if include_cov:
        cols += [f"cov_{i + 1}_{j + 1}" for i, j in zip(*iu)]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(cols) + "\n")
        for t in range(len(beliefs)):
            row = [str(t), *(_fmt(v) for v in beliefs.means[t])]
            if include_cov:
                row += [_fmt(v) for v in beliefs.covs[t][iu]]
            fh.write(",".join(row) + "\n")


def read_beliefs_csv(path) -> BeliefSequence:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        d = sum(1 for c in header if c.startswith("mu_"))
        has_cov = any(c.startswith("cov_") for c in header)
        rows = [line.strip().split(",") for line in fh if line.strip()]
    t = len(rows)
    means = np.empty((t, d))
    covs = np.zeros((t, d, d))
    iu = np.triu_indices(d)
    for k, parts in enumerate(rows):
        vals = [float(p) for p in parts]
        means[k] = vals[1: 1 + d]
        if has_cov:
            covs[k][iu] = vals[1 + d:]
            covs[k][iu[1], iu[0]] = vals[1 + d:]
    return BeliefSequence(means, covs)


RESULTS_HEADER = "trial,seed,method,dkf_applied,nrmse,maae,runtime_s,status"


def write_results_csv(path, results) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for r in results:
            fh.write(
                f"{r.trial_id},{r.seed},{r.method},{str(r.dkf_applied).lower()},"
                f"{_fmt(r.nrmse)},{_fmt(r.maae)},{_fmt(r.runtime_s)},{r.status}\n"
            )


def read_results_csv(path) -> list[MethodResult]:
    results = []
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != RESULTS_HEADER:
            raise ParseError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",", maxsplit=7)
            if len(parts) != 8:
                raise ParseError(f"{path}: line {lineno}: expected 8 fields")
            trial, seed, method, dkf, nr, ma, rt, status = parts
            results.append(MethodResult(
                trial, int(seed), method, dkf == "true",
                float(nr), float(ma), float(rt), status,
            ))
    return results
