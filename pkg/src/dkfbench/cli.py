"""Command-line interface: synth, preprocess, run, and verify subcommands.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric
failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .config import RunConfig, dump_config, parse_config
from .errors import ConfigError, DataError, NumericError
from .evaluate import ExperimentOptions, display_name, run_experiment, tabulate
from .filters import UtParams
from .preprocess import ProcessedTrial, preprocess_trial
from .synth import LgssSpec, TuningSpec, gen_cosine_tuning, gen_lgss, random_stable_system

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dkf-bench",
        description="Bayesian-filter benchmark harness for neural decoding",
    )
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration and exit")
    parser.add_argument("--trial", type=int, action="append", dest="trials",
                        help="trial id (repeatable; overrides config)")
    parser.add_argument("--seed", "--seeds", dest="seeds",
                        help="comma-separated seed list (overrides config)")
    parser.add_argument("--methods", help="comma-separated method list (overrides config)")
    parser.add_argument("--output", help="output directory (overrides config)")
    parser.add_argument("--jobs", type=int, help="worker processes (overrides config)")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    parser.add_argument("command", nargs="?",
                        choices=["synth", "preprocess", "run", "verify"],
                        help="subcommand to execute")
    return parser


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    if args.trials:
        cfg.trials = tuple(args.trials)
    if args.seeds:
        try:
            cfg.seeds = tuple(int(s) for s in args.seeds.split(","))
        except ValueError:
            raise ConfigError(f"--seeds: expected integers, got {args.seeds!r}") from None
    if args.methods:
        cfg.methods = tuple(m.strip() for m in args.methods.split(","))
    if args.output:
        cfg.output_dir = args.output
    if args.jobs:
        cfg.jobs = args.jobs
    if args.no_figures:
        cfg.figures = False
    return cfg


def _tuning_spec(cfg: RunConfig, trial_id: int) -> TuningSpec:
    return TuningSpec(
        neuron_count=cfg.synth_neurons,
        baseline_rate=cfg.synth_baseline_rate,
        modulation=cfg.synth_modulation,
        bin_noise=cfg.synth_bin_noise,
        gain_std=cfg.synth_gain_std,
        direction_concentration=cfg.synth_direction_concentration or None,
        length=cfg.synth_samples,
        seed=cfg.synth_seed + trial_id,
    )


def _raw_paths(cfg: RunConfig, trial_id: int):
    base = Path(cfg.data_dir)
    return base / f"trial_{trial_id}_spikes.csv", base / f"trial_{trial_id}_velocities.csv"


def _processed_paths(cfg: RunConfig, trial_id: int):
    base = Path(cfg.data_dir)
    return base / f"trial_{trial_id}_observations.csv", base / f"trial_{trial_id}_latents.csv"


def cmd_synth(cfg: RunConfig) -> int:
    Path(cfg.data_dir).mkdir(parents=True, exist_ok=True)
    for trial_id in cfg.trials:
        if cfg.source == "synth-lgss":
            params = random_stable_system(cfg.synth_seed + trial_id, d=2, p=10)
            data = gen_lgss(LgssSpec(params, length=cfg.synth_samples,
                                     seed=cfg.synth_seed + trial_id))
            trial = ProcessedTrial.from_arrays(data.observations, data.latents,
                                               trial_id=str(trial_id),
                                               bin_width=cfg.bin_ms / 1000.0)
            obs_path, lat_path = _processed_paths(cfg, trial_id)
            dataio.write_processed_trial(trial, obs_path, lat_path)
            print(f"trial {trial_id}: wrote {obs_path} and {lat_path}")
        else:
            data = gen_cosine_tuning(_tuning_spec(cfg, trial_id))
            spikes_path, vel_path = _raw_paths(cfg, trial_id)
            dataio.write_spikes_csv(spikes_path, data.spikes)
            dataio.write_velocity_csv(vel_path, data.velocities)
            print(f"trial {trial_id}: wrote {spikes_path} and {vel_path}")
    return EXIT_OK


def _preprocess_one(cfg: RunConfig, trial_id: int) -> ProcessedTrial:
    spikes_path, vel_path = _raw_paths(cfg, trial_id)
    spikes, velocities = dataio.ingest(vel_path, spikes_path)
    stats = cfg.n_fit if cfg.zscore_scope == "train" else None
    return preprocess_trial(
        spikes, velocities, trial_id=str(trial_id), bin_width=cfg.bin_ms / 1000.0,
        smooth_window=cfg.smooth_window, n_components=cfg.pca_components,
        min_samples=cfg.min_samples, moving_sum_mode=cfg.moving_sum_mode,
        stats_samples=stats,
    )


def cmd_preprocess(cfg: RunConfig) -> int:
    for trial_id in cfg.trials:
        trial = _preprocess_one(cfg, trial_id)
        obs_path, lat_path = _processed_paths(cfg, trial_id)
        obs_path.parent.mkdir(parents=True, exist_ok=True)
        dataio.write_processed_trial(trial, obs_path, lat_path)
        print(f"trial {trial_id}: {trial.length} samples -> {obs_path} and {lat_path}")
    return EXIT_OK


def _obtain_trial(cfg: RunConfig, trial_id: int) -> ProcessedTrial:
    """Processed files if present, else raw files, else in-memory synthesis."""
    obs_path, lat_path = _processed_paths(cfg, trial_id)
    if obs_path.exists() and lat_path.exists():
        return dataio.read_processed_trial(obs_path, lat_path)
    spikes_path, vel_path = _raw_paths(cfg, trial_id)
    if spikes_path.exists() and vel_path.exists():
        return _preprocess_one(cfg, trial_id)
    if cfg.source == "csv":
        raise DataError(f"trial {trial_id}: no data files under {cfg.data_dir}")
    if cfg.source == "synth-lgss":
        params = random_stable_system(cfg.synth_seed + trial_id, d=2, p=10)
        data = gen_lgss(LgssSpec(params, length=cfg.synth_samples,
                                 seed=cfg.synth_seed + trial_id))
        return ProcessedTrial.from_arrays(data.observations, data.latents,
                                          trial_id=str(trial_id),
                                          bin_width=cfg.bin_ms / 1000.0)
    data = gen_cosine_tuning(_tuning_spec(cfg, trial_id))
    stats = cfg.n_fit if cfg.zscore_scope == "train" else None
    return preprocess_trial(
        data.spikes, data.velocities, trial_id=str(trial_id),
        bin_width=cfg.bin_ms / 1000.0, smooth_window=cfg.smooth_window,
        n_components=cfg.pca_components, min_samples=cfg.min_samples,
        moving_sum_mode=cfg.moving_sum_mode, stats_samples=stats,
    )


def _options_from_config(cfg: RunConfig) -> ExperimentOptions:
    return ExperimentOptions(
        mlp_epochs=cfg.mlp_epochs, mlp_learning_rate=cfg.mlp_learning_rate,
        mlp_l2=cfg.mlp_l2, lstm_epochs=cfg.lstm_epochs,
        lstm_learning_rate=cfg.lstm_learning_rate, lstm_l2=cfg.lstm_l2,
        lstm_batch=cfg.lstm_batch, lstm_hidden=cfg.lstm_hidden,
        lstm_selection=cfg.lstm_selection, gp_restarts=cfg.gp_restarts,
        gp_max_train=cfg.gp_max_train, pd_strategy=cfg.dkf_pd_strategy,
        ut=UtParams(cfg.ut_alpha, cfg.ut_beta, cfg.ut_kappa),
        n_fit=cfg.n_fit, n_test=cfg.n_test, train_fraction=cfg.train_fraction,
        keep_predictions=cfg.figures or cfg.save_predictions,
    )


def cmd_run(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    options = _options_from_config(cfg)
    all_results = []
    for trial_id in cfg.trials:
        trial = _obtain_trial(cfg, trial_id)
        results = run_experiment(trial, list(cfg.methods), list(cfg.seeds),
                                 options=options, jobs=cfg.jobs)
        if cfg.figures or cfg.save_predictions:
            _emit_trial_outputs(cfg, out, trial, results)
        all_results.extend(results)
    for r in all_results:
        r.predictions = None
    dataio.write_results_csv(out / "results.csv", all_results)
    for metric in ("nrmse", "maae"):
        table = tabulate(all_results, metric=metric)
        (out / f"table_{metric}.csv").write_text(table.to_csv(), encoding="ascii")
        (out / f"table_{metric}.txt").write_text(table.to_text() + "\n", encoding="ascii")
        if cfg.figures:
            from .figures import save_percent_figure

            save_percent_figure(out / f"percent_{metric}.png", table)
        print(f"\n{metric.upper()} (baseline absolute, others % vs Kalman)")
        print(table.to_text())
    print(f"\nwrote {out / 'results.csv'}")
    return EXIT_OK


def _emit_trial_outputs(cfg, out, trial, results) -> None:
    test_truth = trial.latents[cfg.n_fit: cfg.n_fit + cfg.n_test]
    first_seed = min(cfg.seeds)
    predictions = {}
    for r in results:
        if r.seed == first_seed and r.predictions is not None and r.status == "ok":
            predictions[display_name(r.method, r.dkf_applied)] = r.predictions
    if cfg.save_predictions:
        from .filters import BeliefSequence

        for label, pred in predictions.items():
            name = label.lower().replace("-", "_")
            path = out / f"trial_{trial.trial_id}_{name}_means.csv"
            dataio.write_beliefs_csv(path, BeliefSequence(pred, np.zeros((len(pred), 2, 2))))
    if cfg.figures and predictions:
        from .figures import save_trajectory_figure

        shown = {k: v for k, v in list(predictions.items())[:4]}
        save_trajectory_figure(out / f"trial_{trial.trial_id}_trajectories.png",
                               test_truth, shown, bin_width=trial.bin_width)


def cmd_verify(cfg: RunConfig) -> int:
    from .verification import run_verification

    return EXIT_OK if run_verification() else EXIT_VERIFY


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        if not args.command:
            parser.print_usage()
            return EXIT_CONFIG
        handler = {"synth": cmd_synth, "preprocess": cmd_preprocess,
                   "run": cmd_run, "verify": cmd_verify}[args.command]
        return handler(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
