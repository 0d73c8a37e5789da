"""
Sampled-data servo loop: ZOH first-order-lag-plus-dead-time plant, digital
PID with a pluggable derivative source, and piecewise-stationary sensor noise.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DERIVATIVE_SOURCES = ("bd", "bdMa", "bdBw", "aise", "aiseVrfEr")


@dataclass(frozen=True)
class PlantConfig:
    """K exp(-deadTime s) / (tauC s + 1) sampled every Ts seconds."""

    K: float
    tau_c: float
    dead_time: float
    Ts: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError(f"K must be positive, got {self.K}")
        if not self.tau_c > 0:
            raise ValueError(f"tau_c must be positive, got {self.tau_c}")
        if self.dead_time < 0:
            raise ValueError(f"dead_time must be >= 0, got {self.dead_time}")
        if not self.Ts > 0:
            raise ValueError(f"Ts must be positive, got {self.Ts}")
        ratio = self.dead_time / self.Ts
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(
                f"dead_time/Ts must be an integer, got {self.dead_time}/{self.Ts} = {ratio}"
            )


class DiscretePlant:
    """y_{k+1} = gamma y_k + K (1 - gamma) u_{k - nd}."""

    def __init__(self, gamma: float, gain: float, nd: int):
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        self.gamma = gamma
        self.gain = gain
        self.nd = nd
        self.lag_state = 0.0
        self.delay_line: deque[float] = deque([0.0] * nd, maxlen=nd) if nd else deque()

    @property
    def output(self) -> float:
        return self.lag_state

    def step(self, u: float) -> float:
        """Apply u_k, return y_{k+1}."""
        if self.nd:
            u_delayed = self.delay_line[0]
            self.delay_line.append(u)
        else:
            u_delayed = u
        self.lag_state = self.gamma * self.lag_state + self.gain * u_delayed
        return self.lag_state


def zoh_discretize(cfg: PlantConfig) -> DiscretePlant:
    gamma = math.exp(-cfg.Ts / cfg.tau_c)
    nd = int(round(cfg.dead_time / cfg.Ts))
    return DiscretePlant(gamma, cfg.K * (1.0 - gamma), nd)


def plant_step(plant: DiscretePlant, u: float) -> float:
    return plant.step(u)


INTEGRATOR_UNITS = ("sample", "time")


@dataclass(frozen=True)
class PidConfig:
    """PID gains; Kd multiplies a derivative in units of 1/s.

    ``integrator="sample"`` realizes Ki/(z-1) literally (Ki added per sample);
    ``integrator="time"`` treats Ki as a continuous-time gain in 1/s, so the
    per-sample increment is Ki*Ts.
    """

    Kp: float
    Ki: float
    Kd: float
    Ts: float
    derivative_source: str = "bd"
    integrator: str = "sample"

    def __post_init__(self):
        if not self.Ts > 0:
            raise ValueError(f"Ts must be positive, got {self.Ts}")
        if self.integrator not in INTEGRATOR_UNITS:
            raise ValueError(f"integrator must be one of {INTEGRATOR_UNITS}, got {self.integrator!r}")
        if self.derivative_source not in DERIVATIVE_SOURCES:
            raise ValueError(
                f"unknown derivative source {self.derivative_source!r}; "
                f"expected one of {DERIVATIVE_SOURCES}"
            )


class PidController:
    """u = Kp e + u_i + Kd de/dt with u_i,k = u_i,k-1 + Ki' e_{k-1}.

    Ki' is Ki or Ki*Ts depending on ``cfg.integrator``.
    """

    def __init__(self, cfg: PidConfig):
        self.cfg = cfg
        self.ui = 0.0
        self._e_prev = 0.0
        self._ki = cfg.Ki * cfg.Ts if cfg.integrator == "time" else cfg.Ki

    def step(self, e: float, d_est: float) -> tuple[float, float, float, float]:
        c = self.cfg
        self.ui += self._ki * self._e_prev
        up = c.Kp * e
        ud = c.Kd * d_est
        self._e_prev = e
        return up + self.ui + ud, up, self.ui, ud


def pid_step(pid: PidController, e: float, d_est: float) -> tuple[float, float, float, float]:
    return pid.step(e, d_est)


@dataclass(frozen=True)
class NoiseModel:
    """Half-open segments [start, end) with standard deviation D2."""

    segments: tuple[tuple[int, int, float], ...]
    seed: int = 0

    def __post_init__(self):
        segs = tuple((int(a), int(b), float(d)) for a, b, d in self.segments)
        for a, b, d in segs:
            if b <= a:
                raise ValueError(f"empty noise segment {a}:{b}")
            if d < 0:
                raise ValueError(f"D2 must be >= 0, got {d}")
        for (_, b0, _), (a1, _, _) in zip(segs, segs[1:]):
            if a1 != b0:
                raise ValueError(f"noise segments must be contiguous, gap/overlap at {b0}/{a1}")
        object.__setattr__(self, "segments", segs)

    def std(self, N: int) -> np.ndarray:
        if not self.segments or self.segments[0][0] != 0 or self.segments[-1][1] < N:
            raise ValueError(f"noise segments do not cover [0, {N})")
        D = np.empty(N)
        for a, b, d in self.segments:
            D[a:min(b, N)] = d
        return D


def generate_noise(model: NoiseModel, N: int) -> np.ndarray:
    D = model.std(N)
    rng = np.random.default_rng(model.seed)
    return D * rng.standard_normal(N)


TRACE_COLUMNS = ("k", "t", "r", "y", "ym", "e", "u", "up", "ui", "ud")


@dataclass
class ClosedLoopTrace:
    """Column arrays of one closed-loop run."""

    k: np.ndarray
    t: np.ndarray
    r: np.ndarray
    y: np.ndarray
    ym: np.ndarray
    e: np.ndarray
    u: np.ndarray
    up: np.ndarray
    ui: np.ndarray
    ud: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.k)

    def rows(self):
        cols = [getattr(self, c) for c in TRACE_COLUMNS]
        for i in range(len(self)):
            yield tuple(col[i] for col in cols)


def simulate_closed_loop(
    plant: DiscretePlant,
    pid: PidController,
    derivative,
    noise: np.ndarray | None,
    r_seq: Sequence[float] | float,
    N: int,
    Ts: float,
    on_step: Callable | None = None,
) -> ClosedLoopTrace:
    """Measure -> control -> actuate, N times.

    ``derivative`` is any object with ``step(e) -> float`` (a fresh instance).
    ``on_step`` receives the derivative-source return value if it is not a
    plain float (used to collect AISE diagnostics).
    """
    r = np.full(N, float(r_seq)) if np.isscalar(r_seq) else np.asarray(r_seq, dtype=float)
    if r.shape != (N,):
        raise ValueError(f"command must have {N} samples, got {r.shape}")
    noise = np.zeros(N) if noise is None else np.asarray(noise, dtype=float)
    if noise.shape != (N,):
        raise ValueError(f"noise must have {N} samples, got {noise.shape}")
    out = {c: np.zeros(N) for c in TRACE_COLUMNS}
    y = plant.output
    for k in range(N):
        ym = y + noise[k]
        e = r[k] - ym
        d = derivative.step(e)
        if on_step is not None:
            on_step(d)
        d = getattr(d, "d_hat", d)
        u, up, ui, ud = pid.step(e, d)
        out["y"][k] = y
        out["ym"][k] = ym
        out["e"][k] = e
        out["u"][k] = u
        out["up"][k] = up
        out["ui"][k] = ui
        out["ud"][k] = ud
        y = plant.step(u)
    out["k"] = np.arange(N)
    out["t"] = out["k"] * Ts
    out["r"] = r
    return ClosedLoopTrace(**out)


def rmse(y: Sequence[float], y_bar: Sequence[float]) -> float:
    y = np.asarray(y, dtype=float)
    y_bar = np.asarray(y_bar, dtype=float)
    if y.shape != y_bar.shape or y.size == 0:
        raise ValueError(f"length mismatch: {y.shape} vs {y_bar.shape}")
    return float(np.sqrt(np.mean((y - y_bar) ** 2)))


def settling_time(t: np.ndarray, y: np.ndarray, final: float, band: float = 0.02) -> float:
    """First time after which |y - final| stays within ``band * |final|``."""
    outside = np.nonzero(np.abs(np.asarray(y) - final) > band * abs(final))[0]
    if outside.size == 0:
        return float(t[0])
    if outside[-1] + 1 >= len(t):
        return math.inf
    return float(t[outside[-1] + 1])
