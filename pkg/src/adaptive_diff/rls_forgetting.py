"""
Recursive least squares for the input-estimation coefficients.

Two covariance updates are provided:

* classic RLS, where the information matrix only accumulates data;
* variable-rate forgetting with exponential resetting (VRF-ER), where

      P'^{-1} = lam P^{-1} + (1 - lam) R_inf + PhiT' R PhiT

  and ``lam`` comes from an F-test comparing short- and long-window
  covariances of the residual error.

Both are implemented as a rank-2 correction of ``P`` (matrix inversion
lemma); the resetting blend costs one extra linear solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateCovarianceError, NotReadyError
from .fdist import f_cdf, f_quantile  # noqa: F401  (re-exported)

# condition number above which the long-window covariance counts as singular
SINGULAR_COND = 1e12


@dataclass
class RlsState:
    """Coefficient estimate ``theta`` and its covariance ``P``."""

    theta: np.ndarray
    P: np.ndarray

    @classmethod
    def initial(cls, R_theta: np.ndarray, theta0: np.ndarray | None = None) -> "RlsState":
        """P_0 = R_theta^{-1}; theta_0 defaults to zero."""
        R_theta = np.atleast_2d(np.asarray(R_theta, dtype=float))
        P0 = np.linalg.inv(R_theta)
        P0 = 0.5 * (P0 + P0.T)
        if theta0 is None:
            theta0 = np.zeros(R_theta.shape[0])
        return cls(theta=np.asarray(theta0, dtype=float).copy(), P=P0)

    @property
    def l_theta(self) -> int:
        return self.theta.shape[0]

    def copy(self) -> "RlsState":
        return RlsState(self.theta.copy(), self.P.copy())


@dataclass(frozen=True)
class VrfConfig:
    """F-test forgetting parameters.

    eta : gain mapping the test statistic to the forgetting factor
    tau_n, tau_d : short and long window lengths
    alpha : significance level
    """

    eta: float
    tau_n: int
    tau_d: int
    alpha: float

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.tau_n < 1:
            raise ValueError(f"tau_n must be >= 1, got {self.tau_n}")
        if self.tau_d <= self.tau_n:
            raise ValueError(f"tau_d must exceed tau_n, got tau_d={self.tau_d}, tau_n={self.tau_n}")
        if self.tau_d < 6:
            raise ValueError(f"tau_d must be >= 6, got {self.tau_d}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class ErConfig:
    """Resetting matrix ``R_inf`` (symmetric positive definite)."""

    R_inf: np.ndarray

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R_inf, dtype=float))
        if R.shape[0] != R.shape[1]:
            raise ValueError(f"R_inf must be square, got {R.shape}")
        if not np.allclose(R, R.T):
            raise ValueError("R_inf must be symmetric")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R_inf must be positive definite")
        object.__setattr__(self, "R_inf", R)

    @classmethod
    def scaled_identity(cls, scale: float, l_theta: int) -> "ErConfig":
        return cls(scale * np.eye(l_theta))

    @property
    def eig_max_inverse(self) -> float:
        """Largest eigenvalue of R_inf^{-1}, the eventual bound on P."""
        return 1.0 / float(np.linalg.eigvalsh(self.R_inf).min())


def _check_weights(R_tilde: np.ndarray) -> np.ndarray:
    w = np.diag(R_tilde)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError(f"R_tilde must be diagonal with positive entries, got {w}")
    return w


def _rank2_update(
    theta: np.ndarray, Q: np.ndarray, Phi_t: np.ndarray, z_t: np.ndarray, w: np.ndarray
) -> RlsState:
    # P' = Q - Q Phi^T (W^{-1} + Phi Q Phi^T)^{-1} Phi Q, with the matching gain
    QPt = Q @ Phi_t.T
    S = np.diag(1.0 / w) + Phi_t @ QPt
    gain = np.linalg.solve(S, QPt.T).T
    P_new = Q - gain @ QPt.T
    P_new = 0.5 * (P_new + P_new.T)
    theta_new = theta - gain @ (z_t + Phi_t @ theta)
    return RlsState(theta_new, P_new)


def rls_update_classic(
    state: RlsState, Phi_tilde: np.ndarray, z_tilde: np.ndarray, R_tilde: np.ndarray
) -> RlsState:
    """One step of classic RLS on the stacked retrospective residual.

    Minimizes the accumulated cost sum_i (z_i + Phi_i theta)^T R (z_i + Phi_i theta)
    plus the prior term, so the new coefficients satisfy
    ``theta' = theta - P' Phi^T R (z + Phi theta)``.
    """
    w = _check_weights(np.atleast_2d(R_tilde))
    Phi_t = np.atleast_2d(np.asarray(Phi_tilde, dtype=float))
    z_t = np.asarray(z_tilde, dtype=float).reshape(-1)
    return _rank2_update(state.theta, state.P, Phi_t, z_t, w)


def rls_update_vrf_er(
    state: RlsState,
    Phi_tilde: np.ndarray,
    z_tilde: np.ndarray,
    R_tilde: np.ndarray,
    lam: float,
    er: ErConfig,
) -> RlsState:
    """RLS step with forgetting factor ``lam`` and exponential resetting.

    With ``lam == 1`` this is exactly :func:`rls_update_classic`.
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"forgetting factor must lie in (0, 1], got {lam}")
    w = _check_weights(np.atleast_2d(R_tilde))
    Phi_t = np.atleast_2d(np.asarray(Phi_tilde, dtype=float))
    z_t = np.asarray(z_tilde, dtype=float).reshape(-1)
    P = state.P
    if lam < 1.0:
        # (lam P^{-1} + (1 - lam) R_inf)^{-1} = (lam I + (1 - lam) P R_inf)^{-1} P
        M = lam * np.eye(P.shape[0]) + (1.0 - lam) * (P @ er.R_inf)
        try:
            Q = np.linalg.solve(M, P)
        except np.linalg.LinAlgError as exc:
            raise DegenerateCovarianceError("resetting blend is singular") from exc
        Q = 0.5 * (Q + Q.T)
    else:
        Q = P
    return _rank2_update(state.theta, Q, Phi_t, z_t, w)


def residual_error(z_tilde: np.ndarray, Phi_tilde: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Two-component residual error z~ + Phi~ theta."""
    return np.asarray(z_tilde, dtype=float) + np.atleast_2d(Phi_tilde) @ theta


class ForgettingWindow:
    """Ring buffer of the most recent ``capacity`` residual errors in R^2."""

    def __init__(self, capacity: int, dim: int = 2):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._buf = np.zeros((capacity, dim))
        self._next = 0
        self.count = 0

    def push(self, eps: np.ndarray) -> None:
        self._buf[self._next] = eps
        self._next = (self._next + 1) % self.capacity
        self.count += 1

    def __len__(self) -> int:
        return min(self.count, self.capacity)

    def latest(self, tau: int) -> np.ndarray:
        """The ``tau`` most recent entries, oldest first."""
        if tau > len(self):
            raise NotReadyError(f"window holds {len(self)} samples, {tau} requested")
        idx = (self._next - tau + np.arange(tau)) % self.capacity
        return self._buf[idx]


def window_stats(window: ForgettingWindow, tau: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance (divisor ``tau``) of the last ``tau`` residual errors.

    Raises :class:`NotReadyError` when fewer than ``tau`` samples are held.
    """
    X = window.latest(tau)
    mean = X.mean(axis=0)
    D = X - mean
    cov = D.T @ D / tau
    return mean, 0.5 * (cov + cov.T)


def vrf_constants(tau_n: int, tau_d: int) -> tuple[float, float, float]:
    """Constants (a, b, c) of the Lawley-Hotelling F approximation."""
    if tau_d < 6:
        raise ValueError(f"tau_d must be >= 6, got {tau_d}")
    a = (tau_n + tau_d - 3) * (tau_d - 1) / ((tau_d - 5) * (tau_d - 2))
    if a == 1:
        raise ValueError(f"invalid window pair ({tau_n}, {tau_d}): a == 1")
    b = 4 + 2 * (tau_n + 1) / (a - 1)
    c = 2 * tau_n * (b - 2) / (b * (tau_d - 3))
    return a, b, c


def vrf_statistic(
    Sigma_n: np.ndarray,
    Sigma_d: np.ndarray,
    cfg: VrfConfig,
    threshold: float | None = None,
) -> float:
    """Test statistic g; positive values mean the short window is significant.

    ``threshold`` is sqrt(F^{-1}(1 - alpha)) and can be passed in to avoid
    recomputing the quantile every step.  A (near-)singular long-window
    covariance returns ``-inf``, meaning "not significant".
    """
    _, b, c = vrf_constants(cfg.tau_n, cfg.tau_d)
    if threshold is None:
        threshold = math.sqrt(f_quantile(2 * cfg.tau_n, b, 1.0 - cfg.alpha))
    Sigma_d = np.asarray(Sigma_d, dtype=float)
    ev = np.linalg.eigvalsh(0.5 * (Sigma_d + Sigma_d.T))
    if ev[0] <= 0 or ev[-1] > SINGULAR_COND * ev[0]:
        return -math.inf
    tr = float(np.trace(np.linalg.solve(Sigma_d, Sigma_n)))
    ratio = (cfg.tau_n / cfg.tau_d) * tr / c
    return math.sqrt(max(ratio, 0.0)) - threshold


def forgetting_factor(g: float, eta: float) -> float:
    """1 / (1 + eta g 1[g]); the unit step is 0 at g = 0."""
    if g > 0:
        return 1.0 / (1.0 + eta * g)
    return 1.0


class VariableRateForgetting:
    """Streaming forgetting-factor selection from residual errors."""

    def __init__(self, cfg: VrfConfig):
        self.cfg = cfg
        self.a, self.b, self.c = vrf_constants(cfg.tau_n, cfg.tau_d)
        self.threshold = math.sqrt(f_quantile(2 * cfg.tau_n, self.b, 1.0 - cfg.alpha))
        self.window = ForgettingWindow(cfg.tau_d)

    def update(self, eps: np.ndarray) -> tuple[float, float]:
        """Push a residual error; return (lambda, g).

        Until the long window is full ``g`` is NaN and lambda is 1.
        """
        self.window.push(eps)
        if len(self.window) < self.cfg.tau_d:
            return 1.0, math.nan
        _, Sn = window_stats(self.window, self.cfg.tau_n)
        _, Sd = window_stats(self.window, self.cfg.tau_d)
        g = vrf_statistic(Sn, Sd, self.cfg, threshold=self.threshold)
        return forgetting_factor(g, self.cfg.eta), g
