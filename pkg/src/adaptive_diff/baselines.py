"""
Conventional causal differentiators: backward difference (BD), BD followed by
a moving average (BD/MA), and BD followed by a digital Butterworth low-pass
(BD/BW).
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np


def backward_difference(e_k: float, e_prev: float, Ts: float) -> float:
    if not Ts > 0:
        raise ValueError(f"Ts must be positive, got {Ts}")
    return (e_k - e_prev) / Ts


class MovingAverage:
    """Mean of the last ``window`` inputs; partial window during start-up."""

    def __init__(self, window: int):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.window = window
        self._buf: deque[float] = deque(maxlen=window)

    def step(self, u: float) -> float:
        self._buf.append(u)
        return math.fsum(self._buf) / len(self._buf)


def moving_average_step(ma: MovingAverage, u: float) -> float:
    return ma.step(u)


class IirFilter:
    """Cascade of second-order sections, transposed direct form II.

    ``sos`` rows are ``[b0, b1, b2, 1, a1, a2]`` (same layout as scipy).
    """

    def __init__(self, sos: np.ndarray):
        sos = np.atleast_2d(np.asarray(sos, dtype=float))
        if sos.shape[1] != 6:
            raise ValueError(f"sos must have 6 columns, got {sos.shape}")
        if not np.allclose(sos[:, 3], 1.0):
            raise ValueError("leading denominator coefficient of each section must be 1")
        self.sos = sos
        self._state = np.zeros((sos.shape[0], 2))

    def reset(self) -> None:
        self._state[:] = 0.0

    def step(self, u: float) -> float:
        x = u
        for s, (b0, b1, b2, _, a1, a2) in enumerate(self.sos):
            w = self._state[s]
            y = b0 * x + w[0]
            w[0] = b1 * x - a1 * y + w[1]
            w[1] = b2 * x - a2 * y
            x = y
        return x

    def _sections(self):
        # a first-order section is stored with b2 = a2 = 0; drop that common z = 0 root
        for row in self.sos:
            if row[2] == 0.0 and row[5] == 0.0:
                yield row[:2], row[3:5]
            else:
                yield row[:3], row[3:]

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(a) for _, a in self._sections()])

    def frequency_response(self, omega: np.ndarray) -> np.ndarray:
        """H(e^{j omega}) for normalized frequencies in rad/sample."""
        zinv = np.exp(-1j * np.asarray(omega, dtype=float))
        H = np.ones_like(zinv)
        for b0, b1, b2, a0, a1, a2 in self.sos:
            H *= (b0 + b1 * zinv + b2 * zinv**2) / (a0 + a1 * zinv + a2 * zinv**2)
        return H

    def to_tf(self) -> tuple[np.ndarray, np.ndarray]:
        """Expanded (numerator, denominator) polynomials in z^{-1}."""
        b = np.array([1.0])
        a = np.array([1.0])
        for bs, as_ in self._sections():
            b = np.polymul(b, bs)
            a = np.polymul(a, as_)
        return b, a


def iir_step(filt: IirFilter, u: float) -> float:
    return filt.step(u)


def butterworth_design(order: int, cutoff: float) -> IirFilter:
    """Digital Butterworth low-pass by prewarped bilinear transform.

    Parameters
    ----------
    order : int
        Filter order (>= 1).
    cutoff : float
        -3 dB frequency in rad/sample, strictly between 0 and pi.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if not 0.0 < cutoff < math.pi:
        raise ValueError(f"cutoff must lie in (0, pi) rad/sample, got {cutoff}")
    # analog cutoff for a bilinear map with fs = 1/2 (s = (z-1)/(z+1))
    wa = math.tan(cutoff / 2.0)
    poles = [
        wa * complex(-math.sin(math.pi * (2 * m + 1) / (2 * order)),
                     math.cos(math.pi * (2 * m + 1) / (2 * order)))
        for m in range(order)
    ]
    sections = []
    for m in range(order // 2):
        p = poles[m]
        # pair p with its conjugate: analog section wa^2 / (s^2 - 2 Re(p) s + |p|^2)
        pz = (1 + p) / (1 - p)
        k = (wa * wa) / abs(1 - p) ** 2
        # zeros of the digital section both at z = -1
        sections.append([k, 2 * k, k, 1.0, -2 * pz.real, abs(pz) ** 2])
    if order % 2:
        p = -wa
        pz = (1 + p) / (1 - p)
        k = wa / (1 - p)
        sections.append([k, k, 0.0, 1.0, -pz, 0.0])
    return IirFilter(np.array(sections))


class BackwardDifference:
    """Streaming BD with zero initial condition on the differentiated signal."""

    def __init__(self, Ts: float):
        if not Ts > 0:
            raise ValueError(f"Ts must be positive, got {Ts}")
        self.Ts = Ts
        self._prev = 0.0

    def step(self, e: float) -> float:
        d = (e - self._prev) / self.Ts
        self._prev = e
        return d


class FilteredDifference:
    """BD followed by a smoother exposing ``step``."""

    def __init__(self, Ts: float, smoother):
        self.bd = BackwardDifference(Ts)
        self.smoother = smoother

    def step(self, e: float) -> float:
        return self.smoother.step(self.bd.step(e))
