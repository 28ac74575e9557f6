"""Spike/velocity preprocessing.

Turns per-neuron spike event times plus a uniformly sampled 2-d velocity
trace into the paired series the benchmark consumes: smoothed, z-scored
principal-component scores as observations and midpoint-sampled velocities
as latent states. All functions are pure and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, InsufficientDataError, RankError, ValidationError

__all__ = [
    "SpikeEvents",
    "VelocitySeries",
    "ProcessedTrial",
    "bin_spike_counts",
    "moving_sum",
    "paired_downsample",
    "pca_zscore",
    "preprocess_trial",
]

PROCESSED_FORMAT_TAG = "dkf-bench processed v1"


@dataclass
class SpikeEvents:
    """Per-neuron spike timestamps in seconds, non-decreasing within a neuron."""

    events: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.events) < 1:
            raise ValidationError("need at least one neuron")
        clean = []
        for n, ts in enumerate(self.events):
            ts = np.asarray(ts, dtype=float)
            if ts.size and ts.min() < 0:
                raise ValidationError(f"neuron {n}: negative spike time")
            if ts.size > 1 and (np.diff(ts) < 0).any():
                raise ValidationError(f"neuron {n}: spike times not sorted")
            clean.append(ts)
        self.events = clean

    @property
    def neuron_count(self) -> int:
        return len(self.events)


@dataclass
class VelocitySeries:
    """2-d velocity samples on a uniform time grid."""

    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.timestamps.ndim != 1 or len(self.timestamps) < 2:
            raise ValidationError("need at least two velocity samples")
        if self.values.shape != (len(self.timestamps), 2):
            raise ValidationError(
                f"velocity values must be (T, 2), got {self.values.shape}"
            )
        diffs = np.diff(self.timestamps)
        step = diffs[0]
        if step <= 0 or (np.abs(diffs - step) > 1e-6 * step + 1e-12).any():
            raise ValidationError("velocity timestamps are not a uniform grid")

    @property
    def spacing(self) -> float:
        return float(self.timestamps[1] - self.timestamps[0])

    @property
    def span(self) -> float:
        """Covered duration, counting one spacing past the last sample."""
        return len(self.timestamps) * self.spacing


@dataclass
class ProcessedTrial:
    """Paired observation/latent series at a fixed bin width."""

    observations: np.ndarray  # (T, k) z-scored PC scores
    latents: np.ndarray  # (T, 2) velocities
    bin_width: float
    trial_id: str

    def __post_init__(self):
        self.observations = np.asarray(self.observations, dtype=float)
        self.latents = np.asarray(self.latents, dtype=float)
        if self.observations.shape[0] != self.latents.shape[0]:
            raise ValidationError("observations and latents must have equal length")

    @property
    def length(self) -> int:
        return self.observations.shape[0]

    @classmethod
    def from_arrays(cls, observations, latents, trial_id="trial", bin_width=0.1):
        return cls(observations, latents, bin_width, trial_id)


def _bin_count(span: float, width: float) -> int:
    # Small forgiveness so 0.3 / 0.1 style float artifacts round up correctly.
    return int(np.floor(span / width + 1e-9))


def bin_spike_counts(events: SpikeEvents, bin_width: float, t_start: float, t_end: float) -> np.ndarray:
    """Count spikes per half-open bin [t_start + b*w, t_start + (b+1)*w).

    Returns an integer (bins, neurons) matrix. Spikes outside the range
    are dropped; a spike exactly on a boundary lands in the upper bin.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if t_end <= t_start:
        raise ValueError("empty time range")
    n_bins = _bin_count(t_end - t_start, bin_width)
    if n_bins < 1:
        raise ValueError("time range shorter than one bin")
    counts = np.zeros((n_bins, events.neuron_count), dtype=np.int64)
    for n, ts in enumerate(events.events):
        sel = ts[(ts >= t_start) & (ts < t_start + n_bins * bin_width)]
        if sel.size == 0:
            continue
        idx = np.floor((sel - t_start) / bin_width).astype(np.int64)
        idx = idx[idx < n_bins]
        counts[:, n] = np.bincount(idx, minlength=n_bins)
    return counts


def moving_sum(x, window: int, mode: str = "trailing") -> np.ndarray:
    """Windowed sum along axis 0 with partial windows at the edges.

    "trailing" sums entries (t-window+1 .. t); "centered" sums
    (t - window//2 .. t + (window-1)//2). Both clip at the array bounds.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if mode not in ("trailing", "centered"):
        raise ValueError(f"unknown moving-sum mode {mode!r}")
    x = np.asarray(x)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    n = x.shape[0]
    csum = np.concatenate([np.zeros((1, x.shape[1]), dtype=x.dtype), np.cumsum(x, axis=0)])
    t = np.arange(n)
    if mode == "trailing":
        lo, hi = t - window + 1, t
    else:
        lo, hi = t - window // 2, t + (window - 1) // 2
    lo = np.clip(lo, 0, None)
    hi = np.clip(hi, None, n - 1)
    out = csum[hi + 1] - csum[lo]
    return out[:, 0] if squeeze else out


def _midpoint_indices(n_coarse: int, target: float, spacing: float, n_samples: int) -> np.ndarray:
    """Index of the sample nearest each coarse interval's temporal midpoint."""
    mids = (np.arange(n_coarse) + 0.5) * target
    idx = np.floor(mids / spacing + 0.5).astype(np.int64)
    return np.clip(idx, 0, n_samples - 1)


def paired_downsample(
    counts_fine: np.ndarray,
    velocities: VelocitySeries,
    target: float = 0.1,
    fine_width: float = 1.0 / 30000.0,
):
    """Aggregate fine spike bins to `target` intervals; pick midpoint velocities.

    Spike counts are summed within each target interval; the velocity kept for
    an interval is the sample nearest its temporal midpoint.
    """
    counts_fine = np.asarray(counts_fine)
    if counts_fine.ndim != 2:
        raise ValueError("counts must be a (bins, neurons) matrix")
    span_fine = counts_fine.shape[0] * fine_width
    span_vel = velocities.span
    if abs(span_fine - span_vel) > target:
        raise AlignmentError(
            f"spike span {span_fine:.6g}s and velocity span {span_vel:.6g}s "
            f"differ by more than one {target:.6g}s interval"
        )
    per = target / fine_width
    per_int = int(round(per))
    if per_int < 1 or abs(per - per_int) > 1e-6 * per_int:
        raise AlignmentError(
            f"target {target:.6g}s is not a whole multiple of the fine width {fine_width:.6g}s"
        )
    n_coarse = _bin_count(min(span_fine, span_vel), target)
    usable = n_coarse * per_int
    coarse = counts_fine[:usable].reshape(n_coarse, per_int, -1).sum(axis=1)
    idx = _midpoint_indices(n_coarse, target, velocities.spacing, len(velocities.timestamps))
    return coarse, velocities.values[idx]


def pca_zscore(x, k: int = 10, stats_rows: int | None = None) -> np.ndarray:
    """Z-scored scores of the top-k principal components of x.

    Components are ordered by descending explained variance and oriented so
    each direction's largest-magnitude loading is positive; score columns are
    standardized with a one-degree-of-freedom correction. When stats_rows is
    given, the centering, components and z-scoring statistics are fitted on
    the first stats_rows rows only and applied to all rows (leakage-free
    variant); by default the whole series is used.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("input must be a (T, N) matrix")
    t_all, n = x.shape
    fit = x if stats_rows is None else x[:stats_rows]
    t_fit = fit.shape[0]
    if t_fit <= k:
        raise ValueError(f"need more than k={k} rows, got {t_fit}")
    mean = fit.mean(axis=0)
    _, s, vt = np.linalg.svd(fit - mean, full_matrices=False)
    rank = int((s > max(t_fit, n) * np.finfo(float).eps * (s[0] if s.size else 0.0)).sum())
    if rank < k:
        raise RankError(f"centered data has rank {rank} < k={k}")
    components = vt[:k].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    scores = (x - mean) @ components.T
    fit_scores = (fit - mean) @ components.T
    mu = fit_scores.mean(axis=0)
    sd = fit_scores.std(axis=0, ddof=1)
    if (sd == 0).any():
        raise RankError("a principal-component score column is constant")
    return (scores - mu) / sd


def preprocess_trial(
    events: SpikeEvents,
    velocities: VelocitySeries,
    *,
    trial_id: str = "trial",
    bin_width: float = 0.1,
    smooth_window: int = 10,
    n_components: int = 10,
    min_samples: int = 6000,
    moving_sum_mode: str = "trailing",
    stats_samples: int | None = None,
) -> ProcessedTrial:
    """Full pipeline: bin spikes, smooth, PCA + z-score; midpoint velocities.

    Spike counts are binned at bin_width directly from the event times
    (equivalent to summing finer bins within each interval), smoothed with a
    moving sum and reduced to z-scored principal-component scores. Latents
    are the velocity samples nearest each bin's temporal midpoint.
    """
    t0 = float(velocities.timestamps[0])
    n_bins = _bin_count(velocities.span, bin_width)
    if n_bins < min_samples:
        raise InsufficientDataError(min_samples, n_bins)
    counts = bin_spike_counts(events, bin_width, t0, t0 + n_bins * bin_width)
    idx = _midpoint_indices(n_bins, bin_width, velocities.spacing, len(velocities.timestamps))
    latents = velocities.values[idx]
    smoothed = moving_sum(counts, smooth_window, mode=moving_sum_mode)
    observations = pca_zscore(smoothed, k=n_components, stats_rows=stats_samples)
    return ProcessedTrial(observations, latents, bin_width, trial_id)
