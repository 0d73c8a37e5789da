import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from adaptive_diff.fdist import betainc, f_cdf, f_quantile

# exact b for (tau_n, tau_d) = (20, 80) is 36136/259
B_EXACT = 36136 / 259
# quantile at 0.92 for F(40, 36136/259), solved offline with 40-digit arithmetic
Q_40_B_092 = 1.3986564681254418


def f_pdf(x, d1, d2):
    logc = (
        math.lgamma(0.5 * (d1 + d2)) - math.lgamma(0.5 * d1) - math.lgamma(0.5 * d2)
        + 0.5 * d1 * math.log(d1 / d2)
    )
    return math.exp(logc + (0.5 * d1 - 1) * math.log(x) - 0.5 * (d1 + d2) * math.log1p(d1 * x / d2))


def cdf_by_quadrature(x, d1, d2):
    val, _ = quad(f_pdf, 0.0, x, args=(d1, d2), epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


class TestBetainc:
    def test_endpoints(self):
        assert betainc(2.0, 3.0, 0.0) == 0.0
        assert betainc(2.0, 3.0, 1.0) == 1.0

    def test_uniform_case(self):
        for x in np.linspace(0.05, 0.95, 10):
            assert betainc(1.0, 1.0, x) == pytest.approx(x, abs=1e-14)

    def test_closed_form_a1(self):
        # I_x(1, b) = 1 - (1 - x)^b
        for b in (0.5, 2.0, 69.76):
            for x in (0.01, 0.3, 0.9):
                assert betainc(1.0, b, x) == pytest.approx(1 - (1 - x) ** b, abs=1e-14)

    @given(st.floats(0.1, 50), st.floats(0.1, 50), st.floats(0.001, 0.999))
    def test_reflection(self, a, b, x):
        assert betainc(a, b, x) + betainc(b, a, 1 - x) == pytest.approx(1.0, abs=1e-12)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            betainc(0.0, 1.0, 0.5)


class TestQuantile:
    @pytest.mark.parametrize("d", [1, 5, 40, 139.52])
    def test_median_equal_dof(self, d):
        assert f_quantile(d, d, 0.5) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("p", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    def test_cauchy_like_closed_form(self, p):
        assert f_quantile(1, 1, p) == pytest.approx(math.tan(math.pi * p / 2) ** 2, abs=1e-6, rel=1e-10)

    def test_tan_squared_value(self):
        assert f_quantile(1, 1, 0.9) == pytest.approx(39.86345818906, rel=1e-10)

    def test_noninteger_dof_against_quadrature(self):
        q = f_quantile(40, 139.52, 0.92)
        assert cdf_by_quadrature(q, 40, 139.52) == pytest.approx(0.92, abs=1e-10)

    def test_frozen_high_precision_value(self):
        assert f_quantile(40, B_EXACT, 0.92) == pytest.approx(Q_40_B_092, rel=1e-12)

    def test_p_zero(self):
        assert f_quantile(3, 4, 0.0) == 0.0

    @pytest.mark.parametrize("p", [1.0, -0.1, 1.5])
    def test_p_out_of_range(self, p):
        with pytest.raises(ValueError):
            f_quantile(3, 4, p)

    @pytest.mark.parametrize("d1, d2", [(0, 1), (1, -2), (math.inf, 1)])
    def test_bad_dof(self, d1, d2):
        with pytest.raises(ValueError):
            f_quantile(d1, d2, 0.5)

    @given(st.floats(0.5, 100), st.floats(0.5, 200), st.floats(0.001, 0.999))
    def test_inverse_of_cdf(self, d1, d2, p):
        assert f_cdf(f_quantile(d1, d2, p), d1, d2) == pytest.approx(p, abs=1e-10)

    @given(st.floats(0.5, 100), st.floats(0.5, 200), st.floats(0.01, 0.98), st.floats(0.001, 0.01))
    def test_strictly_increasing(self, d1, d2, p, dp):
        assert f_quantile(d1, d2, p + dp) > f_quantile(d1, d2, p)


def test_cdf_against_quadrature():
    for d1, d2 in [(2, 3), (40, 139.52), (7.5, 11.25)]:
        for x in (0.2, 1.0, 2.5):
            assert f_cdf(x, d1, d2) == pytest.approx(cdf_by_quadrature(x, d1, d2), abs=1e-10)
