"""Regression estimators for the observation/state maps.

Nadaraya-Watson kernel regression (also the covariance estimator), a small
tanh feedforward network, Gaussian-process regression, and a windowed LSTM.
"""

from .common import TrainConfig
from .gp import GpModel, gp_condition, gp_fit, gp_kernel, gp_log_marginal_likelihood, gp_predict
from .lstm import LstmModel, build_windows, lstm_fit, lstm_init, lstm_predict
from .mlp import MlpModel, mlp_fit, mlp_init, mlp_jacobian, mlp_predict
from .nw import CovFunction, NwModel, fit_cov_function, nw_loo_mse, nw_predict, optimize_bandwidth
from .serialize import load_model, save_model

__all__ = [
    "TrainConfig",
    "NwModel",
    "CovFunction",
    "nw_predict",
    "nw_loo_mse",
    "optimize_bandwidth",
    "fit_cov_function",
    "MlpModel",
    "mlp_init",
    "mlp_fit",
    "mlp_predict",
    "mlp_jacobian",
    "GpModel",
    "gp_kernel",
    "gp_condition",
    "gp_fit",
    "gp_predict",
    "gp_log_marginal_likelihood",
    "LstmModel",
    "lstm_init",
    "build_windows",
    "lstm_fit",
    "lstm_predict",
    "save_model",
    "load_model",
]
