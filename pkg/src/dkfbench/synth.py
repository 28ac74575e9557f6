"""Ground-truth synthetic datasets.

Two generators: exact linear-Gaussian state-space draws (with closed-form
conditional moments, used to verify the discriminative filter against the
Kalman filter), and a rectified cosine-tuning spiking model whose raw
output feeds the full preprocessing pipeline. Everything is a pure
function of its spec and seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnstableSystemError
from .filters import StateSpaceParams
from .linalg import solve_spd, symmetrize
from .preprocess import SpikeEvents, VelocitySeries

__all__ = [
    "LgssSpec",
    "TuningSpec",
    "TrialDataset",
    "stationary_cov",
    "gen_lgss",
    "exact_posterior_moments",
    "gen_cosine_tuning",
    "sample_spike_events",
    "random_stable_system",
]


@dataclass
class TrialDataset:
    """A generated or ingested trial, either processed arrays or raw series."""

    trial_id: str
    seed: int
    provenance: str
    latents: np.ndarray | None = None  # (T, d)
    observations: np.ndarray | None = None  # (T, p)
    spikes: SpikeEvents | None = None
    velocities: VelocitySeries | None = None


@dataclass
class LgssSpec:
    """Linear-Gaussian system draw: stable params, length, seed."""

    params: StateSpaceParams
    length: int
    seed: int
    init_state: np.ndarray | None = None


@dataclass
class TuningSpec:
    """Rectified cosine-tuning population over a 2-d AR(1) velocity.

    Neuron n fires as a Poisson process with rate
    max(0, baseline + modulation * <direction_n, velocity> + bin_noise * eps),
    optionally scaled by a slow shared multiplicative gain (log-gain
    Ornstein-Uhlenbeck with time constant gain_tau and stationary log-std
    gain_std). The gain models population-excitability drift: per-bin spike
    counts are then only interpretable relative to the inferred gain, which
    makes accurate decoding a nonlinear (normalizing) operation. Preferred
    directions default to a von Mises cluster (concentration
    direction_concentration, drawn once from direction_seed), giving the
    anisotropic direction coverage typical of a recorded population.

    length counts output samples at bin_width; the velocity grid is finer
    (velocity_step) so rates vary within each output bin.
    """

    neuron_count: int = 30
    preferred_directions: np.ndarray | None = None  # (n, 2) unit rows
    baseline_rate: float = 1.0
    modulation: float = 120.0
    bin_noise: float = 0.0
    gain_std: float = 0.5
    gain_tau: float = 5.0
    direction_concentration: float | None = 3.0
    direction_seed: int = 7
    length: int = 7000
    seed: int = 0
    bin_width: float = 0.1
    velocity_step: float = 0.01
    ar_coeff: float = 0.995
    velocity_std: float = 1.0

    def directions(self) -> np.ndarray:
        if self.preferred_directions is not None:
            d = np.asarray(self.preferred_directions, dtype=float)
            return d / np.linalg.norm(d, axis=1, keepdims=True)
        if self.direction_concentration is not None:
            rng = np.random.default_rng(self.direction_seed)
            angles = rng.vonmises(0.0, self.direction_concentration, self.neuron_count)
        else:
            angles = 2.0 * np.pi * np.arange(self.neuron_count) / self.neuron_count
        return np.column_stack([np.cos(angles), np.sin(angles)])


def spectral_radius(a) -> float:
    return float(np.abs(np.linalg.eigvals(np.atleast_2d(a))).max())


def stationary_cov(a, g) -> np.ndarray:
    """Solve S = A S A^T + G by the vectorized linear system."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    g = np.atleast_2d(np.asarray(g, dtype=float))
    if spectral_radius(a) >= 1.0:
        raise UnstableSystemError(f"spectral radius {spectral_radius(a):.4f} >= 1")
    d = a.shape[0]
    lhs = np.eye(d * d) - np.kron(a, a)
    s = np.linalg.solve(lhs, g.ravel()).reshape(d, d)
    return symmetrize(s)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(symmetrize(m))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def gen_lgss(spec: LgssSpec) -> TrialDataset:
    """Draw a trajectory and observations from the linear-Gaussian model.

    z_0 is drawn from the stationary distribution unless init_state is set;
    the per-step noise draws are ordered (state noise block, then
    observation noise block) so the output is a pure function of the seed.
    """
    p = spec.params
    if p.H is None or p.R is None:
        raise ValueError("spec.params must include H and R")
    rng = np.random.default_rng(spec.seed)
    d = p.state_dim
    n_obs = p.H.shape[0]
    s = stationary_cov(p.A, p.G)
    if spec.init_state is not None:
        z = np.asarray(spec.init_state, dtype=float).copy()
    else:
        z = _psd_sqrt(s) @ rng.standard_normal(d)
    noise_z = rng.standard_normal((spec.length, d)) @ _psd_sqrt(p.G).T
    noise_x = rng.standard_normal((spec.length, n_obs)) @ _psd_sqrt(p.R).T
    latents = np.empty((spec.length, d))
    for i in range(spec.length):
        z = p.A @ z + noise_z[i]
        latents[i] = z
    observations = latents @ p.H.T + noise_x
    return TrialDataset(
        trial_id=f"lgss-{spec.seed}", seed=spec.seed, provenance="lgss",
        latents=latents, observations=observations,
    )


def exact_posterior_moments(params: StateSpaceParams):
    """Closed-form conditional moments of the latent given one observation.

    Returns (coef, q) with f(x) = coef @ x and constant covariance q. The
    information-form identity pinv(q) - pinv(S) = H^T R^-1 H ties these
    moments to the Kalman update and underwrites the equivalence tests.
    """
    if params.H is None or params.R is None or params.S is None:
        raise ValueError("params must include H, R and S")
    h, r, s = params.H, params.R, symmetrize(params.S)
    b = symmetrize(h @ s @ h.T + r)
    coef = solve_spd(b, h @ s).T
    q = symmetrize(s - coef @ h @ s)
    return coef, q


def random_stable_system(seed: int, d: int = 2, p: int = 10,
                         radius: float = 0.9) -> StateSpaceParams:
    """A well-conditioned random system for equivalence testing."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d))
    a *= radius / spectral_radius(a)
    w = rng.normal(size=(d, d))
    g = symmetrize(w @ w.T + 0.1 * np.eye(d))
    h = rng.normal(size=(p, d))
    w = rng.normal(size=(p, p))
    r = symmetrize(w @ w.T / p + 0.1 * np.eye(p))
    s = stationary_cov(a, g)
    return StateSpaceParams(A=a, G=g, H=h, R=r, S=s)


def tuning_rates(spec: TuningSpec, velocities: np.ndarray,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Instantaneous firing rates (Hz) per velocity sample and neuron."""
    v = np.atleast_2d(np.asarray(velocities, dtype=float))
    rates = spec.baseline_rate + spec.modulation * (v @ spec.directions().T)
    if spec.bin_noise > 0.0:
        if rng is None:
            rng = np.random.default_rng(spec.seed)
        rates = rates + spec.bin_noise * rng.standard_normal(rates.shape)
    return np.maximum(rates, 0.0)


def sample_spike_events(rates: np.ndarray, step: float,
                        rng: np.random.Generator) -> SpikeEvents:
    """Poisson events from piecewise-constant rates.

    Within each step the rate is constant, so thinning against the per-step
    bound accepts every candidate: draw Poisson counts per step and place
    the events uniformly inside it.
    """
    n_steps, n_neurons = rates.shape
    starts = np.arange(n_steps) * step
    events = []
    for n in range(n_neurons):
        counts = rng.poisson(rates[:, n] * step)
        times = np.repeat(starts, counts) + step * rng.random(int(counts.sum()))
        events.append(np.sort(times))
    return SpikeEvents(events)


def gen_cosine_tuning(spec: TuningSpec) -> TrialDataset:
    """Raw spike events plus the fine-grid velocity trace.

    Draw order is fixed (velocity noise, optional bin noise, gain path,
    then per-neuron event draws) so output is a pure function of the seed.
    """
    rng = np.random.default_rng(spec.seed)
    n_fine = int(round(spec.length * spec.bin_width / spec.velocity_step))
    a = spec.ar_coeff
    innov = spec.velocity_std * np.sqrt(1.0 - a * a)
    noise = innov * rng.standard_normal((n_fine, 2))
    vel = np.empty((n_fine, 2))
    v = spec.velocity_std * rng.standard_normal(2)
    for i in range(n_fine):
        v = a * v + noise[i]
        vel[i] = v
    rates = tuning_rates(spec, vel, rng)
    if spec.gain_std > 0.0:
        rho = np.exp(-spec.velocity_step / spec.gain_tau)
        shocks = np.sqrt(1.0 - rho * rho) * rng.standard_normal(n_fine)
        u = np.empty(n_fine)
        state = rng.standard_normal()
        for i in range(n_fine):
            state = rho * state + shocks[i]
            u[i] = state
        gain = np.exp(spec.gain_std * u - 0.5 * spec.gain_std**2)
        rates = rates * gain[:, None]
    spikes = sample_spike_events(rates, spec.velocity_step, rng)
    velocities = VelocitySeries(np.arange(n_fine) * spec.velocity_step, vel)
    return TrialDataset(
        trial_id=f"cosine-{spec.seed}", seed=spec.seed, provenance="cosine-tuning",
        spikes=spikes, velocities=velocities,
    )
