"""
Discrete-time SISO model and the Kalman forecast/assimilation steps.

The model is

    x_{k+1} = A x_k + B d_k
    y_k     = C x_k + noise

with ``B`` and ``C`` stored as 1-D arrays of length ``n``.  For numerical
differentiation the model is the sampled integrator ``A = 1, B = Ts, C = 1``,
so the estimated input ``d`` is the derivative of ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateCovarianceError

INNOVATION_FLOOR = 1e-12


@dataclass(frozen=True)
class LtiModel:
    """(A, B, C, Ts) with B a column and C a row, both stored flat."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Ts: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(-1)
        C = np.asarray(self.C, dtype=float).reshape(-1)
        n = A.shape[0]
        if n < 1 or A.shape != (n, n):
            raise ValueError(f"A must be square, got shape {A.shape}")
        if B.shape != (n,) or C.shape != (n,):
            raise ValueError(
                f"B and C must have {n} entries, got {B.shape} and {C.shape}"
            )
        if not self.Ts > 0:
            raise ValueError(f"Ts must be positive, got {self.Ts}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Ts", float(self.Ts))

    @property
    def n(self) -> int:
        return self.A.shape[0]


def make_differentiator_model(Ts: float) -> LtiModel:
    """Sampled integrator whose unknown input is the derivative of the output."""
    if not Ts > 0:
        raise ValueError(f"Ts must be positive, got {Ts}")
    return LtiModel(A=[[1.0]], B=[Ts], C=[1.0], Ts=Ts)


@dataclass
class KalmanBelief:
    """Forecast and assimilated estimates for one step."""

    x_fc: np.ndarray
    x_da: np.ndarray
    P_f: np.ndarray
    P_da: np.ndarray
    K_da: np.ndarray
    z: float = 0.0

    @classmethod
    def initial(cls, n: int) -> "KalmanBelief":
        return cls(
            x_fc=np.zeros(n),
            x_da=np.zeros(n),
            P_f=np.zeros((n, n)),
            P_da=np.zeros((n, n)),
            K_da=np.zeros(n),
        )


def _symmetrize(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.T)


def forecast(model: LtiModel, x_da: np.ndarray, d_hat: float) -> tuple[np.ndarray, float]:
    """Propagate the assimilated state one step and predict the output."""
    x_fc = model.A @ np.asarray(x_da, dtype=float) + model.B * d_hat
    return x_fc, float(model.C @ x_fc)


def residual(y_fc: float, y: float) -> float:
    """Forecast output minus measurement."""
    return y_fc - y


def assimilate(
    model: LtiModel, x_fc: np.ndarray, P_f: np.ndarray, z: float, V2: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Data-assimilation step.

    The gain carries the sign convention of a residual defined as
    forecast minus measurement, so ``K_da`` is non-positive for the scalar
    integrator and ``x_da = x_fc + K_da * z``.

    Returns
    -------
    K_da, x_da, P_da
    """
    if V2 < 0 or not np.isfinite(V2):
        raise DegenerateCovarianceError(f"measurement covariance must be >= 0, got {V2}")
    P_f = np.asarray(P_f, dtype=float)
    PCt = P_f @ model.C
    s = float(model.C @ PCt) + V2
    if not np.isfinite(s):
        raise DegenerateCovarianceError(f"innovation variance is not finite: {s}")
    if s < INNOVATION_FLOOR:
        if s < -1e-9 * max(1.0, abs(V2)):
            raise DegenerateCovarianceError(f"negative innovation variance {s}")
        s = INNOVATION_FLOOR
    K_da = -PCt / s
    x_da = np.asarray(x_fc, dtype=float) + K_da * z
    P_da = (np.eye(model.n) + np.outer(K_da, model.C)) @ P_f
    return K_da, x_da, _symmetrize(P_da)


def propagate_covariance(model: LtiModel, P_da: np.ndarray, V1: np.ndarray) -> np.ndarray:
    """Forecast error covariance for the next step."""
    P_f = model.A @ np.asarray(P_da, dtype=float) @ model.A.T + np.asarray(V1, dtype=float)
    return _symmetrize(P_f)


def closed_loop_state_map(model: LtiModel, K_da: np.ndarray) -> np.ndarray:
    """A (I + K_da C), the state map of the estimator error dynamics."""
    return model.A @ (np.eye(model.n) + np.outer(K_da, model.C))
