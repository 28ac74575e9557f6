"""Metrics, data splits, experiment orchestration, and benchmark tables.

A benchmark run evaluates decoding methods on one trial: the first 5000
samples fit the models (3500 training / 1500 validation, drawn without
replacement except for the sequential LSTM split) and the next 1000 are
held out for testing. Every random choice derives from the cell seed
through numpy SeedSequence([seed, role]) with fixed role indices (0 split,
1 feedforward net, 2 GP, 3 LSTM, 4 inverse-map net, 5 GP subsample), so a
(trial, seed, method) cell is reproducible end to end.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InsufficientDataError, UndefinedMetricError
from .filters import (
    DkfInputs,
    GaussianBelief,
    StateSpaceParams,
    UtParams,
    dkf_filter,
    ekf_filter,
    kf_filter,
    kf_fit,
    ukf_filter,
)
from .linalg import symmetrize
from .preprocess import ProcessedTrial
from .regress import (
    NwModel,
    TrainConfig,
    build_windows,
    fit_cov_function,
    gp_fit,
    gp_predict,
    lstm_fit,
    lstm_predict,
    mlp_fit,
    mlp_jacobian,
    mlp_predict,
    nw_predict,
    optimize_bandwidth,
)

__all__ = [
    "nrmse",
    "maae",
    "percent_change",
    "SplitIndices",
    "make_split",
    "ExperimentOptions",
    "MethodResult",
    "run_experiment",
    "tabulate",
    "ResultTable",
    "KNOWN_METHODS",
    "display_name",
]

KNOWN_METHODS = ("kalman", "dkf-nw", "dkf-gp", "dkf-nn", "dkf-lstm", "ekf", "ukf")

ROLE_SPLIT = 0
ROLE_MLP_F = 1
ROLE_GP = 2
ROLE_LSTM = 3
ROLE_MLP_FINV = 4
ROLE_GP_SUBSAMPLE = 5

ZERO_NORM = 1e-12


def _subseed(seed: int, role: int) -> int:
    return int(np.random.SeedSequence([seed, role]).generate_state(1)[0])


def nrmse(pred, truth) -> float:
    """Root-sum-square error over root-sum-square truth; 1.0 for a zero predictor."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    denom = float(np.sqrt(np.sum(truth**2)))
    if denom == 0.0:
        raise UndefinedMetricError("truth is identically zero")
    return float(np.sqrt(np.sum((pred - truth) ** 2)) / denom)


def maae(pred, truth, return_excluded: bool = False):
    """Mean absolute angle (radians) between predicted and true 2-d vectors.

    Steps where either vector has norm below 1e-12 carry no direction and
    are excluded; pass return_excluded=True to also get that count.
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=float))
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    if pred.shape != truth.shape or pred.shape[1] != 2:
        raise ValueError("both arguments must be (T, 2) arrays of equal shape")
    usable = (np.linalg.norm(pred, axis=1) >= ZERO_NORM) & (
        np.linalg.norm(truth, axis=1) >= ZERO_NORM
    )
    excluded = int((~usable).sum())
    if not usable.any():
        raise UndefinedMetricError("no timestep has both vectors nonzero")
    p, t = pred[usable], truth[usable]
    cross = p[:, 0] * t[:, 1] - p[:, 1] * t[:, 0]
    dot = p[:, 0] * t[:, 0] + p[:, 1] * t[:, 1]
    value = float(np.mean(np.abs(np.arctan2(cross, dot))))
    return (value, excluded) if return_excluded else value


def percent_change(baseline: float, value: float) -> int:
    """Signed integer percent change of value relative to baseline."""
    return int(np.rint(100.0 * (value / baseline - 1.0)))


@dataclass
class SplitIndices:
    """Train/validation/test row indices for one seeded run."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int


def make_split(
    trial_length: int,
    seed: int,
    lstm: bool = False,
    n_fit: int = 5000,
    n_test: int = 1000,
    train_fraction: float = 0.7,
) -> SplitIndices:
    """Split the first n_fit rows into train/validation, test on the next n_test.

    Train rows are drawn without replacement from the fit block (sequential
    first block for the LSTM variant); test rows are always the block right
    after the fit rows.
    """
    needed = n_fit + n_test
    if trial_length < needed:
        raise InsufficientDataError(needed, trial_length)
    n_train = int(round(train_fraction * n_fit))
    if lstm:
        train = np.arange(n_train)
        validation = np.arange(n_train, n_fit)
    else:
        perm = np.random.default_rng(_subseed(seed, ROLE_SPLIT)).permutation(n_fit)
        train = np.sort(perm[:n_train])
        validation = np.sort(perm[n_train:])
    test = np.arange(n_fit, n_fit + n_test)
    return SplitIndices(train, validation, test, seed)


@dataclass(frozen=True)
class ExperimentOptions:
    """Tunable knobs for a benchmark run (defaults are the benchmark settings)."""

    mlp_epochs: int = 4000
    mlp_learning_rate: float = 1e-3
    mlp_l2: float = 1e-4
    lstm_epochs: int = 200
    lstm_learning_rate: float = 1e-3
    lstm_l2: float = 1e-4
    lstm_batch: int = 64
    lstm_hidden: int = 20
    lstm_selection: str = "best"
    gp_restarts: int = 5
    gp_max_train: int = 0  # 0 = use every training row
    pd_strategy: str = "verbatim"
    ut: UtParams = field(default_factory=UtParams)
    n_fit: int = 5000
    n_test: int = 1000
    train_fraction: float = 0.7
    keep_predictions: bool = False


@dataclass
class MethodResult:
    """One benchmark cell: metrics for a method on a (trial, seed) pair."""

    trial_id: str
    seed: int
    method: str
    dkf_applied: bool
    nrmse: float
    maae: float
    runtime_s: float
    status: str = "ok"
    predictions: np.ndarray | None = None


def display_name(method: str, dkf_applied: bool) -> str:
    base = {"kalman": "Kalman", "nw": "NW", "gp": "GP", "nn": "NN",
            "lstm": "LSTM", "ekf": "EKF", "ukf": "UKF"}[method]
    return f"DKF-{base}" if dkf_applied else base


def _metric_row(trial_id, seed, method, dkf_applied, pred, truth, runtime, keep):
    issues = []
    try:
        nr = nrmse(pred, truth)
    except UndefinedMetricError:
        nr = float("nan")
        issues.append("nrmse-undefined")
    try:
        ma = maae(pred, truth)
    except UndefinedMetricError:
        ma = float("nan")
        issues.append("maae-undefined")
    return MethodResult(
        trial_id, seed, method, dkf_applied, nr, ma, runtime,
        status=" ".join(issues) if issues else "ok",
        predictions=np.asarray(pred, dtype=float) if keep else None,
    )


def _fit_f_and_residuals(trial, method, seed, split, options):
    """Fit the observation-to-state map; return test predictions and val residuals."""
    x, z = trial.observations, trial.latents
    x_tr, z_tr = x[split.train], z[split.train]
    x_val, z_val = x[split.validation], z[split.validation]
    x_te = x[split.test]
    if method == "nw":
        bandwidth = optimize_bandwidth(x_tr, z_tr)
        model = NwModel(x_tr, z_tr, bandwidth)
        f_val = nw_predict(model, x_val)
        f_te = nw_predict(model, x_te)
    elif method == "nn":
        cfg = TrainConfig(options.mlp_epochs, options.mlp_learning_rate,
                          options.mlp_l2, seed=_subseed(seed, ROLE_MLP_F))
        model = mlp_fit(x_tr, z_tr, cfg)
        f_val = mlp_predict(model, x_val)
        f_te = mlp_predict(model, x_te)
    elif method == "gp":
        if options.gp_max_train and options.gp_max_train < len(x_tr):
            rng = np.random.default_rng(_subseed(seed, ROLE_GP_SUBSAMPLE))
            keep = np.sort(rng.choice(len(x_tr), size=options.gp_max_train, replace=False))
            x_fit, z_fit = x_tr[keep], z_tr[keep]
        else:
            x_fit, z_fit = x_tr, z_tr
        model = gp_fit(x_fit, z_fit, n_restarts=options.gp_restarts,
                       seed=_subseed(seed, ROLE_GP))
        f_val = gp_predict(model, x_val)
        f_te = gp_predict(model, x_te)
    elif method == "lstm":
        cfg = TrainConfig(options.lstm_epochs, options.lstm_learning_rate,
                          options.lstm_l2, seed=_subseed(seed, ROLE_LSTM))
        model = lstm_fit(
            x[: options.n_fit], z[: options.n_fit], cfg,
            hidden=options.lstm_hidden, batch_size=options.lstm_batch,
            val_fraction=1.0 - options.train_fraction, selection=options.lstm_selection,
        )
        windows = build_windows(x[: split.test[-1] + 1], model.window)
        f_val = lstm_predict(model, windows[split.validation])
        f_te = lstm_predict(model, windows[split.test])
    else:
        raise ValueError(f"unknown regressor {method!r}")
    return f_te, x_val, z_val - f_val


def _run_cell(trial, method, seed, options, kf_params, finv_cache=None):
    """Run one (method, seed) cell; returns one or two result rows."""
    x, z = trial.observations, trial.latents
    truth = None
    t0 = time.perf_counter()
    keep = options.keep_predictions

    if method == "kalman":
        split = make_split(trial.length, seed, n_fit=options.n_fit,
                           n_test=options.n_test, train_fraction=options.train_fraction)
        truth = z[split.test]
        init = GaussianBelief(np.zeros(kf_params.state_dim), kf_params.S)
        beliefs = kf_filter(kf_params, x[split.test], init)
        return [_metric_row(trial.trial_id, seed, "kalman", False, beliefs.means,
                            truth, time.perf_counter() - t0, keep)]

    if method in ("ekf", "ukf"):
        split = make_split(trial.length, seed, n_fit=options.n_fit,
                           n_test=options.n_test, train_fraction=options.train_fraction)
        truth = z[split.test]
        cache_key = ("finv", seed)
        if finv_cache is not None and cache_key in finv_cache:
            finv = finv_cache[cache_key]
        else:
            cfg = TrainConfig(options.mlp_epochs, options.mlp_learning_rate,
                              options.mlp_l2, seed=_subseed(seed, ROLE_MLP_FINV))
            finv = mlp_fit(z[split.train], x[split.train], cfg)
            if finv_cache is not None:
                finv_cache[cache_key] = finv
        resid = x[split.validation] - mlp_predict(finv, z[split.validation])
        r_hat = symmetrize(np.cov(resid, rowvar=False, ddof=1))
        params = StateSpaceParams(A=kf_params.A, G=kf_params.G, R=r_hat, S=kf_params.S)
        init = GaussianBelief(np.zeros(kf_params.state_dim), kf_params.S)
        if method == "ekf":
            beliefs = ekf_filter(lambda v: mlp_predict(finv, v),
                                 lambda v: mlp_jacobian(finv, v),
                                 params, x[split.test], init)
        else:
            beliefs = ukf_filter(lambda vs: mlp_predict(finv, vs), params,
                                 x[split.test], ut=options.ut, init=init)
        return [_metric_row(trial.trial_id, seed, method, False, beliefs.means,
                            truth, time.perf_counter() - t0, keep)]

    if not method.startswith("dkf-"):
        raise ValueError(f"unknown method {method!r}")
    regressor = method[4:]
    split = make_split(trial.length, seed, lstm=(regressor == "lstm"),
                       n_fit=options.n_fit, n_test=options.n_test,
                       train_fraction=options.train_fraction)
    truth = z[split.test]
    f_te, x_val, residuals = _fit_f_and_residuals(trial, regressor, seed, split, options)
    raw_runtime = time.perf_counter() - t0
    rows = [_metric_row(trial.trial_id, seed, regressor, False, f_te, truth,
                        raw_runtime, keep)]
    cov_fn = fit_cov_function(x_val, residuals)
    q_te = cov_fn(trial.observations[split.test])
    beliefs = dkf_filter(kf_params, DkfInputs(f_te, q_te), pd_strategy=options.pd_strategy)
    rows.append(_metric_row(trial.trial_id, seed, regressor, True, beliefs.means,
                            truth, time.perf_counter() - t0, keep))
    return rows


def _run_cell_task(args):
    trial, method, seed, options, kf_params = args
    try:
        return _run_cell(trial, method, seed, options, kf_params)
    except Exception as exc:  # record the failed cell, keep the run alive
        dkf = method.startswith("dkf-")
        base = method[4:] if dkf else method
        return [MethodResult(trial.trial_id, seed, base, dkf, float("nan"),
                             float("nan"), 0.0, status=f"error: {exc}")]


def run_experiment(
    trial: ProcessedTrial,
    methods,
    seeds,
    options: ExperimentOptions | None = None,
    jobs: int = 1,
) -> list[MethodResult]:
    """Evaluate methods on a trial across seeds; one or two rows per cell.

    DKF methods additionally report the raw regressor (dkf_applied=False)
    so filtered and unfiltered predictions can be compared. Failed cells
    are recorded with an error status instead of aborting the run.
    """
    options = options or ExperimentOptions()
    for m in methods:
        if m not in KNOWN_METHODS:
            raise ConfigError(f"unknown method {m!r}; known: {', '.join(KNOWN_METHODS)}")
    if trial.length < options.n_fit + options.n_test:
        raise InsufficientDataError(options.n_fit + options.n_test, trial.length)
    kf_params = kf_fit(trial.latents[: options.n_fit], trial.observations[: options.n_fit])
    cells = [(trial, m, s, options, kf_params) for s in seeds for m in methods]
    results: list[MethodResult] = []
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rows in pool.map(_run_cell_task, cells):
                results.extend(rows)
    else:
        finv_cache: dict = {}
        for trial_, method, seed, opts, params in cells:
            try:
                results.extend(_run_cell(trial_, method, seed, opts, params, finv_cache))
            except Exception as exc:
                dkf = method.startswith("dkf-")
                base = method[4:] if dkf else method
                results.append(MethodResult(trial_.trial_id, seed, base, dkf,
                                            float("nan"), float("nan"), 0.0,
                                            status=f"error: {exc}"))
    results.sort(key=lambda r: (r.trial_id, r.seed, r.method, r.dkf_applied))
    return results


ROW_ORDER = [
    ("kalman", False),
    ("nw", False), ("nw", True),
    ("gp", False), ("gp", True),
    ("nn", False), ("nn", True),
    ("lstm", False), ("lstm", True),
    ("ekf", False), ("ukf", False),
]


@dataclass
class TableRow:
    label: str
    cells: list  # one entry per trial plus the Average column; None = missing
    is_baseline: bool


@dataclass
class ResultTable:
    """Per-trial table: absolute baseline row, signed percent rows elsewhere."""

    metric: str
    trial_ids: list
    rows: list

    def to_text(self) -> str:
        headers = ["", *[f"Trial {t}" for t in self.trial_ids], "Average"]
        body = []
        for row in self.rows:
            cells = []
            for c in row.cells:
                if c is None:
                    cells.append("-")
                elif row.is_baseline:
                    cells.append(f"{c:.3f}")
                else:
                    cells.append(f"{c:d}%")
            body.append([row.label, *cells])
        widths = [max(len(r[i]) for r in [headers, *body]) for i in range(len(headers))]
        lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
        for r in body:
            lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
        return "\n".join(lines)

    def to_csv(self) -> str:
        header = ["method", *[str(t) for t in self.trial_ids], "average"]
        lines = [",".join(header)]
        for row in self.rows:
            cells = []
            for c in row.cells:
                if c is None:
                    cells.append("")
                elif row.is_baseline:
                    cells.append(f"{float(c)!r}")
                else:
                    cells.append(str(int(c)))
            lines.append(",".join([row.label, *cells]))
        return "\n".join(lines) + "\n"


def tabulate(results, metric: str = "nrmse", baseline: str = "kalman") -> ResultTable:
    """Seed-averaged per-trial table with percent change against the baseline.

    Metrics are averaged over seeds first (failed cells excluded); percent
    cells are computed on those averages and rounded to integers. The
    Average column compares across-trial means.
    """
    if metric not in ("nrmse", "maae"):
        raise ConfigError(f"unknown metric {metric!r}")
    agg: dict = {}
    for r in results:
        value = getattr(r, metric)
        if np.isfinite(value):
            agg.setdefault((r.trial_id, r.method, r.dkf_applied), []).append(value)
    means = {k: float(np.mean(v)) for k, v in agg.items()}
    trial_ids = sorted({r.trial_id for r in results})
    base_by_trial = {}
    for t in trial_ids:
        key = (t, baseline, False)
        if key not in means:
            raise ConfigError(f"baseline {baseline!r} missing for trial {t}")
        base_by_trial[t] = means[key]
    base_avg = float(np.mean(list(base_by_trial.values())))
    rows = []
    for method, dkf in ROW_ORDER:
        present = [t for t in trial_ids if (t, method, dkf) in means]
        if not present:
            continue
        is_base = method == baseline and not dkf
        cells = []
        for t in trial_ids:
            key = (t, method, dkf)
            if key not in means:
                cells.append(None)
            elif is_base:
                cells.append(means[key])
            else:
                cells.append(percent_change(base_by_trial[t], means[key]))
        vals = [means[(t, method, dkf)] for t in present]
        avg = float(np.mean(vals))
        cells.append(avg if is_base else percent_change(base_avg, avg))
        rows.append(TableRow(display_name(method, dkf), cells, is_base))
    return ResultTable(metric, trial_ids, rows)
