"""Regularized incomplete beta function and F-distribution CDF/quantile.

Degrees of freedom may be non-integer.
"""

import math

from scipy.optimize import brentq
from scipy.special import betaln

_MAXIT = 10_000
_EPS = 1e-16
_FPMIN = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for I_x(a, b)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0."""
    if a <= 0 or b <= 0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - float(betaln(a, b))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def _check_dof(d1: float, d2: float) -> None:
    if not (d1 > 0 and d2 > 0) or not (math.isfinite(d1) and math.isfinite(d2)):
        raise ValueError(f"degrees of freedom must be positive and finite, got ({d1}, {d2})")


def f_cdf(x: float, d1: float, d2: float) -> float:
    """CDF of the F(d1, d2) distribution."""
    _check_dof(d1, d2)
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return betainc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2))


def f_quantile(d1: float, d2: float, p: float) -> float:
    """Inverse CDF of F(d1, d2) at probability ``p`` in [0, 1).

    The root is bracketed in the beta variable u = d1 x / (d1 x + d2), which
    maps [0, inf) onto [0, 1).  ``p = 1`` has no finite quantile and raises.
    """
    _check_dof(d1, d2)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"p must lie in [0, 1), got {p}")
    if p == 0.0:
        return 0.0
    a, b = 0.5 * d1, 0.5 * d2
    u = brentq(lambda t: betainc(a, b, t) - p, 0.0, 1.0, xtol=1e-300, rtol=8.9e-16, maxiter=500)
    return d2 * u / (d1 * (1.0 - u))
