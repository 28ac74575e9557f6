"""Shared training configuration and initialization helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TrainConfig", "glorot_uniform"]


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-training hyperparameters.

    Defaults match the benchmark's feedforward-network settings; the LSTM
    path overrides epochs.
    """

    epochs: int = 4000
    learning_rate: float = 1e-3
    l2_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be nonnegative")


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))
