"""Bayesian state-estimation filters and a neural-decoding benchmark harness.

The package implements the linear Kalman filter, extended and unscented
variants, and discriminative filters driven by regression-estimated
conditional moments, together with the preprocessing pipeline, synthetic
data generators, metrics, and the CLI that ties a benchmark run together.
"""

from .evaluate import (
    ExperimentOptions,
    MethodResult,
    ResultTable,
    SplitIndices,
    maae,
    make_split,
    nrmse,
    percent_change,
    run_experiment,
    tabulate,
)
from .filters import (
    BeliefSequence,
    DkfInputs,
    GaussianBelief,
    StateSpaceParams,
    UtParams,
    dkf_filter,
    ekf_filter,
    kf_filter,
    kf_fit,
    robust_dkf_filter,
    ukf_filter,
)
from .linalg import Tolerances, is_positive_definite, pseudo_inverse, solve_spd, symmetrize
from .preprocess import (
    ProcessedTrial,
    SpikeEvents,
    VelocitySeries,
    bin_spike_counts,
    moving_sum,
    paired_downsample,
    pca_zscore,
    preprocess_trial,
)
from .synth import (
    LgssSpec,
    TrialDataset,
    TuningSpec,
    exact_posterior_moments,
    gen_cosine_tuning,
    gen_lgss,
    stationary_cov,
)

__version__ = "0.1.0"
