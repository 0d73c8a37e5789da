"""
Online selection of the Kalman noise covariances.

V1 is restricted to ``eta * I`` and searched over a grid on
[eta_L, eta_U]; V2 is then chosen so that the predicted residual variance
matches the cumulative sample variance of the residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NotReadyError
from .model_kalman import LtiModel


@dataclass(frozen=True)
class AdaptConfig:
    eta_L: float
    eta_U: float
    beta: float
    grid_size: int = 50

    def __post_init__(self):
        if self.eta_L < 0:
            raise ValueError(f"eta_L must be >= 0, got {self.eta_L}")
        if not self.eta_U > self.eta_L:
            raise ValueError(f"eta_U must exceed eta_L, got {self.eta_U} <= {self.eta_L}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.grid_size < 2:
            raise ValueError(f"grid_size must be >= 2, got {self.grid_size}")

    @property
    def grid(self) -> np.ndarray:
        """Log-spaced candidates; linear when eta_L is 0."""
        if self.eta_L > 0:
            return np.geomspace(self.eta_L, self.eta_U, self.grid_size)
        return np.linspace(self.eta_L, self.eta_U, self.grid_size)


class ResidualStats:
    """Welford running mean and sum of squared deviations of the residual."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, z: float) -> "ResidualStats":
        self.count += 1
        delta = z - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (z - self.mean)
        return self

    @property
    def ready(self) -> bool:
        return self.count >= 2

    @property
    def variance(self) -> float:
        # divisor k = count - 1 for residuals z_0..z_k
        if self.count < 2:
            raise NotReadyError("residual variance needs at least two samples")
        return max(self.m2, 0.0) / (self.count - 1)


def update_residual_stats(stats: ResidualStats, z: float) -> ResidualStats:
    return stats.update(z)


def jf(S_hat: float, P_da_prev: np.ndarray, model: LtiModel, V1) -> float:
    """S_hat - C (A P_da A^T + V1) C^T."""
    P_f = model.A @ np.asarray(P_da_prev, dtype=float) @ model.A.T + np.asarray(V1, dtype=float)
    return float(S_hat - model.C @ P_f @ model.C)


def _jf_on_grid(S_hat: float, P_da_prev: np.ndarray, model: LtiModel, etas: np.ndarray) -> np.ndarray:
    base = S_hat - float(model.C @ model.A @ np.asarray(P_da_prev, dtype=float) @ model.A.T @ model.C)
    return base - etas * float(model.C @ model.C)


def adapt_covariances(
    stats, P_da_prev: np.ndarray, model: LtiModel, cfg: AdaptConfig
) -> tuple[np.ndarray, float, float]:
    """Grid search for (V1, V2) matching predicted and sample residual variance.

    ``stats`` is a :class:`ResidualStats` or the sample variance itself.

    Returns
    -------
    V1 : ndarray
        ``eta_k * I``.
    V2 : float
        Non-negative measurement covariance.
    eta_k : float
        Selected grid point.
    """
    S_hat = stats.variance if isinstance(stats, ResidualStats) else float(stats)
    etas = cfg.grid
    J = _jf_on_grid(S_hat, P_da_prev, model, etas)
    positive = J > 0
    if positive.any():
        Jp = J[positive]
        target = cfg.beta * Jp.min() + (1.0 - cfg.beta) * Jp.max()
        i = int(np.argmin(np.abs(J - target)))
    else:
        i = int(np.argmin(np.abs(J)))
    eta_k = float(etas[i])
    V1 = eta_k * np.eye(model.n)
    # re-evaluate at the chosen point so that V2 equals J_f(V1) bit for bit
    V2 = max(jf(S_hat, P_da_prev, model, V1), 0.0) if positive.any() else 0.0
    return V1, V2, eta_k
