"""
Synthetic smooth trajectories with closed-form derivatives, and SNR helpers.

``sigmoidLateral`` stands in for the lateral relative position of a vehicle
drifting one lane width: ``W / (1 + exp(-(t - t0) / s))`` metres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .io import SignalTable

KINDS = ("sigmoidLateral", "sinusoid", "polynomial")

DEFAULT_PARAMS = {
    # lane width [m], manoeuvre time scale [s]; t0 defaults to mid-horizon
    "sigmoidLateral": {"width": 3.5, "scale": 1.0, "t0": None},
    "sinusoid": {"amplitude": 1.0, "freq_hz": 1.0, "phase": 0.0},
    # coefficients of c0 + c1 t + c2 t^2 + ...
    "polynomial": {"coeffs": (0.0, 0.0, 1.0)},
}


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    y_clean: np.ndarray
    dydt: np.ndarray
    y: np.ndarray
    noise_std: float

    def table(self) -> SignalTable:
        return SignalTable(self.t, self.y)


def snr_db(signal, noise) -> float:
    """10 log10 of the signal-to-noise energy ratio; +inf for zero noise."""
    s = np.asarray(signal, dtype=float)
    n = np.asarray(noise, dtype=float)
    if s.shape != n.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {n.shape}")
    ps = float(np.sum(s * s))
    pn = float(np.sum(n * n))
    if pn == 0.0:
        return math.inf
    if ps == 0.0:
        return -math.inf
    return 10.0 * math.log10(ps / pn)


def _sigmoid(t, width, scale, t0):
    # logistic written via tanh to stay finite for large |t - t0|
    x = (t - t0) / scale
    y = width * 0.5 * (1.0 + np.tanh(0.5 * x))
    dy = width / scale * 0.25 / np.cosh(0.5 * x) ** 2
    return y, dy


def _sinusoid(t, amplitude, freq_hz, phase):
    w = 2.0 * math.pi * freq_hz
    return amplitude * np.sin(w * t + phase), amplitude * w * np.cos(w * t + phase)


def _polynomial(t, coeffs):
    # np.polyval expects highest power first
    c = np.asarray(coeffs, dtype=float)[::-1]
    dc = np.polyder(c) if c.size > 1 else np.zeros(1)
    return np.polyval(c, t), np.polyval(dc, t)


def clean_trajectory(kind: str, t: np.ndarray, **params) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free signal and its analytic derivative at times ``t``."""
    if kind not in KINDS:
        raise ValueError(f"unknown trajectory kind {kind!r}; expected one of {KINDS}")
    unknown = set(params) - set(DEFAULT_PARAMS[kind])
    if unknown:
        raise ValueError(f"unknown parameter(s) for {kind}: {sorted(unknown)}")
    p = {**DEFAULT_PARAMS[kind], **params}
    if kind == "sigmoidLateral":
        if p["t0"] is None:
            p["t0"] = 0.5 * (t[0] + t[-1])
        return _sigmoid(t, p["width"], p["scale"], p["t0"])
    if kind == "sinusoid":
        return _sinusoid(t, p["amplitude"], p["freq_hz"], p["phase"])
    return _polynomial(t, p["coeffs"])


def synth_trajectory(
    kind: str,
    N: int,
    Ts: float,
    seed: int = 0,
    snr: float | None = 40.0,
    **params,
) -> Trajectory:
    """Sampled trajectory plus white Gaussian noise at the requested SNR.

    The noise standard deviation is set from the clean signal's mean power,
    so the realized SNR scatters around ``snr`` by sampling error only.
    ``snr=None`` gives a noise-free trajectory.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not Ts > 0:
        raise ValueError(f"Ts must be positive, got {Ts}")
    t = np.arange(N) * Ts
    y, dy = clean_trajectory(kind, t, **params)
    if snr is None:
        return Trajectory(t, y, dy, y.copy(), 0.0)
    sigma = math.sqrt(float(np.mean(y * y))) * 10.0 ** (-snr / 20.0)
    noise = sigma * np.random.default_rng(seed).standard_normal(N)
    return Trajectory(t, y, dy, y + noise, sigma)
