"""
Adaptive input and state estimation (AISE) as a causal differentiator.

Each call to :meth:`Aise.step` consumes one measurement and, in order,

1. forms the residual z_k from the stored forecast,
2. updates the residual statistics and adapts (V1, V2),
3. runs the Kalman data-assimilation step with V2,
4. refreshes the Markov coefficients and the filtered regressors,
5. emits d_hat_k = Phi_k theta_k with the pre-update coefficients,
6. updates the coefficients by RLS (classic or VRF-ER),
7. propagates the forecast covariance with V1 and forecasts x_{k+1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .covariance_adaptation import AdaptConfig, ResidualStats, adapt_covariances
from .input_estimation import (
    IeBuffers,
    IeConfig,
    assemble_stacked,
    build_regressor,
    estimate_input,
    filter_signals,
    update_markov_coefficients,
)
from .model_kalman import (
    INNOVATION_FLOOR,
    KalmanBelief,
    LtiModel,
    assimilate,
    closed_loop_state_map,
    forecast,
    propagate_covariance,
    residual,
)
from .rls_forgetting import (
    ErConfig,
    RlsState,
    VariableRateForgetting,
    VrfConfig,
    residual_error,
    rls_update_classic,
    rls_update_vrf_er,
)


@dataclass(frozen=True)
class VrfEr:
    vrf: VrfConfig
    er: ErConfig


@dataclass(frozen=True)
class AiseConfig:
    """Model, subsystem, adaptation and (optional) forgetting settings.

    ``forgetting=None`` gives classic AISE; a :class:`VrfEr` gives AISE/VRF-ER.
    """

    model: LtiModel
    ie: IeConfig
    adapt: AdaptConfig
    forgetting: VrfEr | None = None

    def __post_init__(self):
        if self.forgetting is not None:
            l = self.ie.l_theta
            if self.forgetting.er.R_inf.shape != (l, l):
                raise ValueError(
                    f"R_inf must be {l}x{l}, got {self.forgetting.er.R_inf.shape}"
                )


@dataclass
class StepDiagnostics:
    d_hat: float
    z: float
    lam: float
    eig_max_P: float
    theta: np.ndarray
    v1_eta: float
    v2: float


class Aise:
    """Streaming AISE differentiator; one instance per signal."""

    def __init__(self, config: AiseConfig, track_eigs: bool = True):
        self.config = config
        self.track_eigs = track_eigs
        model = config.model
        ie = config.ie
        self.belief = KalmanBelief.initial(model.n)
        self.rls = RlsState.initial(ie.R_theta)
        self.buffers = IeBuffers(ie.n_e, ie.n_f, model.n)
        self.stats = ResidualStats()
        self.forgetting = (
            VariableRateForgetting(config.forgetting.vrf) if config.forgetting else None
        )
        self._R_tilde = ie.R_tilde
        self.k = 0

    def step(self, y: float) -> StepDiagnostics:
        cfg = self.config
        model, ie = cfg.model, cfg.ie
        b = self.belief
        buf = self.buffers
        k = self.k

        y_fc = float(model.C @ b.x_fc)
        z = residual(y_fc, y)
        self.stats.update(z)

        if self.stats.ready:
            V1, V2, eta_k = adapt_covariances(self.stats, b.P_da, model, cfg.adapt)
        else:
            eta_k = cfg.adapt.eta_L
            V1, V2 = eta_k * np.eye(model.n), INNOVATION_FLOOR

        K_da, x_da, P_da = assimilate(model, b.x_fc, b.P_f, z, V2)

        H = update_markov_coefficients(model, buf.abar, k, ie.n_f)
        if buf.abar.maxlen:
            buf.abar.appendleft(closed_loop_state_map(model, K_da))
        buf.H = H

        Phi = build_regressor(buf, z)
        Phi_f, d_hat_f = filter_signals(H, buf.phi, buf.d_hat)
        Phi_t, z_t, R_t = assemble_stacked(Phi, Phi_f, z, d_hat_f, ie.R_z, ie.R_d)

        theta = self.rls.theta
        d_hat = estimate_input(Phi, theta)

        if self.forgetting is None:
            lam = 1.0
            self.rls = rls_update_classic(self.rls, Phi_t, z_t, R_t)
        else:
            lam, _ = self.forgetting.update(residual_error(z_t, Phi_t, theta))
            self.rls = rls_update_vrf_er(self.rls, Phi_t, z_t, R_t, lam, cfg.forgetting.er)

        P_f_next = propagate_covariance(model, P_da, V1)
        x_fc_next, _ = forecast(model, x_da, d_hat)

        buf.phi.appendleft(Phi)
        buf.d_hat.appendleft(d_hat)
        buf.z.appendleft(z)
        buf.k = k + 1

        self.belief = KalmanBelief(
            x_fc=x_fc_next, x_da=x_da, P_f=P_f_next, P_da=P_da, K_da=K_da, z=z
        )
        self.k = k + 1
        eig_max = float(np.linalg.eigvalsh(self.rls.P)[-1]) if self.track_eigs else math.nan
        return StepDiagnostics(
            d_hat=d_hat,
            z=z,
            lam=lam,
            eig_max_P=eig_max,
            theta=self.rls.theta.copy(),
            v1_eta=eta_k,
            v2=V2,
        )


def run(config: AiseConfig, signal: Iterable[float]) -> list[StepDiagnostics]:
    """Differentiate a whole signal; one diagnostics record per sample."""
    signal = list(signal)
    if not signal:
        raise ValueError("signal must be nonempty")
    est = Aise(config)
    return [est.step(float(y)) for y in signal]


def differentiate(config: AiseConfig, signal: Iterable[float]) -> np.ndarray:
    """Derivative estimates only."""
    est = Aise(config, track_eigs=False)
    return np.array([est.step(float(y)).d_hat for y in signal])
