"""
Input-estimation subsystem: regressor assembly, filtered regressors and the
stacked quantities handed to RLS.

The estimate is d_hat_k = Phi_k theta_k with

    Phi_k = [d_hat_{k-1} ... d_hat_{k-ne}, z_k, z_{k-1} ... z_{k-ne}]

so ``theta`` holds the ``ne`` feedback coefficients followed by the
``ne + 1`` residual coefficients.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .model_kalman import LtiModel


@dataclass(frozen=True)
class IeConfig:
    """Subsystem order ``n_e``, filter length ``n_f`` and cost weights."""

    n_e: int
    n_f: int
    R_z: float
    R_d: float
    R_theta: np.ndarray

    def __post_init__(self):
        if self.n_e < 1:
            raise ValueError(f"n_e must be >= 1, got {self.n_e}")
        if self.n_f < 1:
            raise ValueError(f"n_f must be >= 1, got {self.n_f}")
        if not (self.R_z > 0 and self.R_d > 0):
            raise ValueError(f"R_z and R_d must be positive, got {self.R_z}, {self.R_d}")
        R = np.asarray(self.R_theta, dtype=float)
        l = self.l_theta
        if R.ndim == 0:
            R = float(R) * np.eye(l)
        if R.shape != (l, l):
            raise ValueError(f"R_theta must be {l}x{l}, got {R.shape}")
        if np.linalg.eigvalsh(0.5 * (R + R.T)).min() <= 0:
            raise ValueError("R_theta must be positive definite")
        object.__setattr__(self, "R_theta", R)

    @property
    def l_theta(self) -> int:
        return 2 * self.n_e + 1

    @property
    def R_tilde(self) -> np.ndarray:
        return np.diag([self.R_z, self.R_d])


class IeBuffers:
    """Zero-initialized histories, newest entry first.

    d_hat : past estimates d_hat_{k-1}, d_hat_{k-2}, ...
    z : past residuals z_{k-1}, z_{k-2}, ...
    phi : past regressors Phi_{k-1}, ...
    abar : past closed-loop maps Abar_{k-1}, ...
    """

    def __init__(self, n_e: int, n_f: int, n: int = 1):
        self.n_e = n_e
        self.n_f = n_f
        l = 2 * n_e + 1
        self.d_hat = deque([0.0] * max(n_e, n_f), maxlen=max(n_e, n_f))
        self.z = deque([0.0] * n_e, maxlen=n_e)
        self.phi = deque([np.zeros(l) for _ in range(n_f)], maxlen=n_f)
        self.abar: deque = deque(maxlen=max(n_f - 1, 0))
        self.H = np.zeros(n_f)
        self.k = 0


def build_regressor(buffers: IeBuffers, z_k: float) -> np.ndarray:
    ne = buffers.n_e
    Phi = np.empty(2 * ne + 1)
    for i in range(ne):
        Phi[i] = buffers.d_hat[i]
    Phi[ne] = z_k
    for i in range(ne):
        Phi[ne + 1 + i] = buffers.z[i]
    return Phi


def estimate_input(Phi: np.ndarray, theta: np.ndarray) -> float:
    return float(Phi @ theta)


def update_markov_coefficients(model: LtiModel, abar_hist, k: int, n_f: int) -> np.ndarray:
    """Impulse-response coefficients H_1..H_nf of the estimator at step ``k``.

    ``abar_hist[j]`` is Abar_{k-1-j}.  H_1 = C B, H_i = C Abar_{k-1} ...
    Abar_{k-i+1} B, and H_i = 0 whenever i > k.
    """
    H = np.zeros(n_f)
    M = np.eye(model.n)
    for i in range(1, min(k, n_f) + 1):
        if i >= 2:
            M = M @ abar_hist[i - 2]
        H[i - 1] = model.C @ M @ model.B
    return H


def filter_signals(H: np.ndarray, phi_hist, d_hat_hist) -> tuple[np.ndarray, float]:
    """Phi_f = sum_i H_i Phi_{k-i} and d_hat_f = sum_i H_i d_hat_{k-i}."""
    n_f = len(H)
    Phi_f = np.zeros_like(phi_hist[0])
    d_hat_f = 0.0
    for i in range(n_f):
        if H[i] != 0.0:
            Phi_f += H[i] * phi_hist[i]
            d_hat_f += H[i] * d_hat_hist[i]
    return Phi_f, d_hat_f


def assemble_stacked(
    Phi: np.ndarray, Phi_f: np.ndarray, z: float, d_hat_f: float, R_z: float, R_d: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    Phi_tilde = np.vstack([Phi_f, Phi])
    z_tilde = np.array([z - d_hat_f, 0.0])
    return Phi_tilde, z_tilde, np.diag([R_z, R_d])


def retrospective_variable(z: float, d_hat_f: float, Phi_f: np.ndarray, theta: np.ndarray) -> float:
    """z - (d_hat_f - Phi_f theta)."""
    return z - (d_hat_f - float(Phi_f @ theta))
