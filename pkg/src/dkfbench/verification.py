"""Fast self-checks runnable from the CLI.

Each check returns (name, passed, detail). The set covers the load-bearing
correctness facts: the discriminative filter reproduces the Kalman filter
under exact linear-Gaussian moments, EKF/UKF collapse to the Kalman filter
for linear observation maps, the metric conventions, and the analytic
network gradients.
"""

from __future__ import annotations

import numpy as np

from .evaluate import maae, nrmse
from .filters import GaussianBelief, dkf_filter, ekf_filter, kf_filter, ukf_filter
from .regress import lstm_init, mlp_init, mlp_jacobian, mlp_predict
from .regress.lstm import _PARAM_FIELDS as LSTM_PARAMS
from .regress.lstm import _loss_and_grads as lstm_loss_and_grads
from .synth import LgssSpec, exact_posterior_moments, gen_lgss, random_stable_system

__all__ = ["run_verification", "VERIFICATION_CHECKS"]


def _dkf_equals_kf(n_instances: int = 25, length: int = 400) -> tuple[bool, str]:
    from .filters import DkfInputs

    worst = 0.0
    for seed in range(n_instances):
        params = random_stable_system(seed)
        data = gen_lgss(LgssSpec(params, length=length, seed=seed + 1000))
        coef, q = exact_posterior_moments(params)
        inputs = DkfInputs(data.observations @ coef.T,
                           np.broadcast_to(q, (length, 2, 2)).copy())
        dkf = dkf_filter(params, inputs)
        kf = kf_filter(params, data.observations, GaussianBelief(np.zeros(2), params.S))
        worst = max(worst, float(np.abs(dkf.means - kf.means).max()))
    return worst < 1e-8, f"max |mean difference| = {worst:.2e} over {n_instances} systems"


def _linear_collapse(n_seeds: int = 3, length: int = 300) -> tuple[bool, str]:
    worst = 0.0
    for seed in range(n_seeds):
        params = random_stable_system(seed + 50)
        data = gen_lgss(LgssSpec(params, length=length, seed=seed + 2000))
        init = GaussianBelief(np.zeros(2), params.S)
        kf = kf_filter(params, data.observations, init)
        ekf = ekf_filter(lambda z: params.H @ z, lambda z: params.H,
                         params, data.observations, init)
        ukf = ukf_filter(lambda zs: zs @ params.H.T, params, data.observations, init=init)
        worst = max(worst, float(np.abs(ekf.means - kf.means).max()),
                    float(np.abs(ukf.means - kf.means).max()))
    return worst < 1e-6, f"max |mean difference| = {worst:.2e} over {n_seeds} seeds"


def _metric_captions() -> tuple[bool, str]:
    rng = np.random.default_rng(0)
    truth = rng.normal(size=(1000, 2))
    zero_ok = abs(nrmse(np.zeros_like(truth), truth) - 1.0) <= 1e-12
    angles = rng.uniform(0, 2 * np.pi, 100_000)
    pred = np.column_stack([np.cos(angles), np.sin(angles)])
    fixed = np.tile([1.0, 0.0], (100_000, 1))
    chance = maae(pred, fixed)
    chance_ok = abs(chance - np.pi / 2) <= 0.02
    return zero_ok and chance_ok, f"zero-predictor nRMSE = 1, chance MAAE = {chance:.3f}"


def _gradient_checks() -> tuple[bool, str]:
    rng = np.random.default_rng(1)
    mlp = mlp_init(5, 2, seed=2)
    x = rng.normal(size=5)
    analytic = mlp_jacobian(mlp, x)
    numeric = np.zeros_like(analytic)
    eps = 1e-6
    for j in range(5):
        hi, lo = x.copy(), x.copy()
        hi[j] += eps
        lo[j] -= eps
        numeric[:, j] = (mlp_predict(mlp, hi) - mlp_predict(mlp, lo)) / (2 * eps)
    mlp_err = float(np.abs(analytic - numeric).max() / np.abs(numeric).max())

    lstm = lstm_init(3, 2, hidden=2, seed=3)
    xw = rng.normal(size=(4, 3, 3))
    y = rng.normal(size=(4, 2))
    _, grads = lstm_loss_and_grads(lstm, xw, y, 1e-3)
    step = 1e-5
    lstm_err = 0.0
    for k in LSTM_PARAMS:
        arr = getattr(lstm, k)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            hi, _ = lstm_loss_and_grads(lstm, xw, y, 1e-3)
            arr[idx] = orig - step
            lo, _ = lstm_loss_and_grads(lstm, xw, y, 1e-3)
            arr[idx] = orig
            numeric_g = (hi - lo) / (2 * step)
            denom = max(abs(numeric_g), 1e-8)
            lstm_err = max(lstm_err, abs(grads[k][idx] - numeric_g) / denom)
    ok = mlp_err < 1e-4 and lstm_err < 1e-4
    return ok, f"relative errors: mlp {mlp_err:.2e}, lstm {lstm_err:.2e}"


def _scalar_hand_example() -> tuple[bool, str]:
    from .filters import DkfInputs, StateSpaceParams

    params = StateSpaceParams(A=[[0.5]], G=[[0.75]], S=[[1.0]])
    out = dkf_filter(params, DkfInputs(np.array([[0.6]]), np.array([[[0.5]]])))
    ok = abs(out.means[0, 0] - 0.6) < 1e-12 and abs(out.covs[0, 0, 0] - 0.5) < 1e-12
    return ok, f"mean = {out.means[0, 0]:.6f}, cov = {out.covs[0, 0, 0]:.6f}"


VERIFICATION_CHECKS = [
    ("dkf-equals-kf", _dkf_equals_kf),
    ("ekf-ukf-linear-collapse", _linear_collapse),
    ("metric-captions", _metric_captions),
    ("gradient-checks", _gradient_checks),
    ("scalar-hand-example", _scalar_hand_example),
]


def run_verification(report=print) -> bool:
    """Run every check; report one line each; True when all pass."""
    all_ok = True
    for name, check in VERIFICATION_CHECKS:
        ok, detail = check()
        all_ok &= ok
        report(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
