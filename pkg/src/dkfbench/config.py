"""Run configuration: a flat key = value text file plus CLI overrides.

Every key has a documented default; unknown keys are rejected. Lists are
comma-separated, booleans are true/false, and ut_kappa accepts "auto"
(meaning 3 - d). `dump_config` emits the canonical form, which re-parses
to an identical configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config", "parse_config_text", "dump_config"]


@dataclass
class RunConfig:
    # data source: synth-cosine | synth-lgss | csv
    source: str = "synth-cosine"
    data_dir: str = "data"
    output_dir: str = "out"
    trials: tuple = (1,)
    methods: tuple = ("kalman", "dkf-nw", "dkf-gp", "dkf-nn", "dkf-lstm", "ekf", "ukf")
    seeds: tuple = (0,)
    jobs: int = 1
    figures: bool = True
    save_predictions: bool = False

    # synthetic generation
    synth_samples: int = 7000
    synth_neurons: int = 30
    synth_seed: int = 0
    synth_baseline_rate: float = 1.0
    synth_modulation: float = 120.0
    synth_bin_noise: float = 0.0
    synth_gain_std: float = 0.5
    synth_direction_concentration: float = 3.0

    # preprocessing
    bin_ms: int = 100
    smooth_window: int = 10
    moving_sum_mode: str = "trailing"  # trailing | centered
    pca_components: int = 10
    zscore_scope: str = "trial"  # trial | train (fit stats on the fit block only)
    min_samples: int = 6000

    # split geometry
    n_fit: int = 5000
    n_test: int = 1000
    train_fraction: float = 0.7

    # filters
    dkf_pd_strategy: str = "verbatim"  # verbatim | drop
    ut_alpha: float = 1.0
    ut_beta: float = 2.0
    ut_kappa: float | None = None  # None = auto (3 - d)

    # training
    mlp_epochs: int = 4000
    mlp_learning_rate: float = 1e-3
    mlp_l2: float = 1e-4
    lstm_epochs: int = 200
    lstm_learning_rate: float = 1e-3
    lstm_l2: float = 1e-4
    lstm_batch: int = 64
    lstm_hidden: int = 20
    lstm_selection: str = "best"  # best | last
    gp_restarts: int = 5
    gp_max_train: int = 0  # 0 = all training rows


_CHOICES = {
    "source": ("synth-cosine", "synth-lgss", "csv"),
    "moving_sum_mode": ("trailing", "centered"),
    "zscore_scope": ("trial", "train"),
    "dkf_pd_strategy": ("verbatim", "drop"),
    "lstm_selection": ("best", "last"),
}


def _parse_value(name: str, kind, raw: str):
    raw = raw.strip()
    if kind is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{name}: expected true/false, got {raw!r}")
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{name}: expected an integer, got {raw!r}") from None
    if kind is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{name}: expected a number, got {raw!r}") from None
    if kind is tuple:
        items = [p.strip() for p in raw.split(",") if p.strip()]
        if name in ("trials", "seeds"):
            try:
                return tuple(int(p) for p in items)
            except ValueError:
                raise ConfigError(f"{name}: expected comma-separated integers") from None
        return tuple(items)
    if name == "ut_kappa":
        if raw.lower() == "auto":
            return None
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{name}: expected a number or 'auto'") from None
    return raw


_FIELD_KINDS = {}
for f in fields(RunConfig):
    if f.name == "ut_kappa":
        _FIELD_KINDS[f.name] = "kappa"
    else:
        _FIELD_KINDS[f.name] = type(f.default)


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_KINDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        kind = _FIELD_KINDS[key]
        value = _parse_value(key, None if kind == "kappa" else kind, raw)
        if key in _CHOICES and value not in _CHOICES[key]:
            raise ConfigError(f"{key}: must be one of {', '.join(_CHOICES[key])}")
        setattr(cfg, key, value)
    _validate(cfg)
    return cfg


def parse_config(path, base: RunConfig | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, base)


def _validate(cfg: RunConfig) -> None:
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if not cfg.seeds:
        raise ConfigError("need at least one seed")
    if not cfg.trials:
        raise ConfigError("need at least one trial")
    if not 0.0 < cfg.train_fraction < 1.0:
        raise ConfigError("train_fraction must be in (0, 1)")


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {_format_value(getattr(cfg, f.name))}" for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"
