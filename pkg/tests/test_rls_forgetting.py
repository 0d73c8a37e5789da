import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_diff.exceptions import NotReadyError
from adaptive_diff.fdist import f_quantile
from adaptive_diff.rls_forgetting import (
    ErConfig,
    ForgettingWindow,
    RlsState,
    VariableRateForgetting,
    VrfConfig,
    forgetting_factor,
    residual_error,
    rls_update_classic,
    rls_update_vrf_er,
    vrf_constants,
    vrf_statistic,
    window_stats,
)

# exact rationals 7663/5850, 36136/259, 16190/31619
A_20_80 = 7663 / 5850
B_20_80 = 36136 / 259
C_20_80 = 16190 / 31619
# g for Sigma_n = Sigma_d = I, (20, 80, 0.08); 40-digit offline evaluation
G_IDENTITY = -0.19446902282669179


def batch_minimizer(theta0, R_theta, Phis, zs, R):
    """argmin of the accumulated quadratic cost, by the normal equations."""
    Omega = R_theta.copy()
    rhs = R_theta @ theta0
    for Phi, z in zip(Phis, zs):
        Omega += Phi.T @ R @ Phi
        rhs -= Phi.T @ R @ z
    return np.linalg.solve(Omega, rhs), Omega


def random_problem(rng, l, steps):
    Phis = [rng.normal(size=(2, l)) for _ in range(steps)]
    zs = [rng.normal(size=2) for _ in range(steps)]
    R = np.diag(rng.uniform(0.1, 2.0, size=2))
    M = rng.normal(size=(l, l))
    R_theta = M @ M.T + l * np.eye(l)
    theta0 = rng.normal(size=l)
    return Phis, zs, R, R_theta, theta0


class TestClassic:
    def test_scalar_example(self):
        s = RlsState(np.zeros(1), np.eye(1))
        s2 = rls_update_classic(s, np.array([[1.0], [0.0]]), np.array([-1.0, 0.0]), np.eye(2))
        assert s2.P[0, 0] == pytest.approx(0.5, abs=1e-15)
        assert s2.theta[0] == pytest.approx(0.5, abs=1e-15)

    def test_zero_regressor(self):
        rng = np.random.default_rng(0)
        P = np.eye(3) * 2.0
        s = RlsState(rng.normal(size=3), P)
        s2 = rls_update_classic(s, np.zeros((2, 3)), rng.normal(size=2), np.eye(2))
        np.testing.assert_array_equal(s2.theta, s.theta)
        np.testing.assert_allclose(s2.P, P, rtol=0, atol=0)

    @pytest.mark.parametrize("l", [1, 3, 5])
    def test_batch_equivalence(self, l):
        rng = np.random.default_rng(100 + l)
        Phis, zs, R, R_theta, theta0 = random_problem(rng, l, 50)
        s = RlsState.initial(R_theta, theta0)
        for Phi, z in zip(Phis, zs):
            s = rls_update_classic(s, Phi, z, R)
        theta_ref, Omega = batch_minimizer(theta0, R_theta, Phis, zs, R)
        assert np.linalg.norm(s.theta - theta_ref) <= 1e-8 * np.linalg.norm(theta_ref)
        np.testing.assert_allclose(s.P, np.linalg.inv(Omega), rtol=1e-8, atol=1e-12)

    def test_initial_covariance(self):
        s = RlsState.initial(10 ** -0.1 * np.eye(25))
        assert s.P[0, 0] == pytest.approx(10 ** 0.1)
        assert not s.theta.any()

    def test_bad_weights(self):
        s = RlsState(np.zeros(1), np.eye(1))
        with pytest.raises(ValueError):
            rls_update_classic(s, np.ones((2, 1)), np.zeros(2), np.diag([1.0, 0.0]))

    def test_eigenvalues_non_increasing(self):
        rng = np.random.default_rng(7)
        s = RlsState.initial(np.eye(4))
        ev = np.linalg.eigvalsh(s.P)
        for _ in range(200):
            s = rls_update_classic(s, rng.normal(size=(2, 4)), rng.normal(size=2), np.diag([1.0, 1e-3]))
            ev_new = np.linalg.eigvalsh(s.P)
            assert np.all(ev_new <= ev + 1e-14)
            assert ev_new.min() > 1e-14
            ev = ev_new


class TestResidualError:
    def test_zero_theta(self):
        z = np.array([1.0, -2.0])
        np.testing.assert_array_equal(residual_error(z, np.ones((2, 3)), np.zeros(3)), z)

    def test_exact_fit(self):
        rng = np.random.default_rng(1)
        Phi, th = rng.normal(size=(2, 3)), rng.normal(size=3)
        np.testing.assert_allclose(residual_error(-Phi @ th, Phi, th), 0.0, atol=1e-15)

    def test_random(self):
        rng = np.random.default_rng(2)
        Phi, th, z = rng.normal(size=(2, 4)), rng.normal(size=4), rng.normal(size=2)
        ref = [z[r] + sum(Phi[r, j] * th[j] for j in range(4)) for r in range(2)]
        np.testing.assert_allclose(residual_error(z, Phi, th), ref, rtol=1e-14)


class TestWindow:
    def test_hand_example(self):
        w = ForgettingWindow(5)
        w.push(np.array([1.0, 0.0]))
        w.push(np.array([-1.0, 0.0]))
        mean, cov = window_stats(w, 2)
        np.testing.assert_array_equal(mean, [0.0, 0.0])
        np.testing.assert_array_equal(cov, [[1.0, 0.0], [0.0, 0.0]])

    def test_constant(self):
        w = ForgettingWindow(4)
        for _ in range(4):
            w.push(np.array([0.3, -2.0]))
        _, cov = window_stats(w, 4)
        np.testing.assert_allclose(cov, 0.0, atol=1e-30)

    def test_two_pass_oracle_after_wrap(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(57, 2))
        w = ForgettingWindow(20)
        for x in X:
            w.push(x)
        assert len(w) == 20 and w.count == 57
        for tau in (5, 20):
            mean, cov = window_stats(w, tau)
            tail = X[-tau:]
            np.testing.assert_allclose(mean, tail.mean(axis=0), rtol=1e-13)
            np.testing.assert_allclose(cov, np.cov(tail.T, bias=True), rtol=1e-12, atol=1e-15)

    def test_not_ready(self):
        w = ForgettingWindow(10)
        w.push(np.zeros(2))
        with pytest.raises(NotReadyError):
            window_stats(w, 2)


class TestConstants:
    def test_example_windows(self):
        a, b, c = vrf_constants(20, 80)
        assert a == pytest.approx(A_20_80, rel=1e-14)
        assert b == pytest.approx(B_20_80, rel=1e-13)
        assert c == pytest.approx(C_20_80, rel=1e-13)
        assert (round(a, 5), round(b, 2), round(c, 5)) == (1.30991, 139.52, 0.51203)

    def test_small_windows(self):
        assert vrf_constants(1, 7) == pytest.approx((3.0, 6.0, 1.0 / 3.0), rel=1e-15)

    def test_short_long_window_rejected(self):
        with pytest.raises(ValueError):
            vrf_constants(20, 5)

    @pytest.mark.parametrize("kw", [dict(tau_d=5, tau_n=2), dict(tau_d=20, tau_n=20), dict(eta=-1.0)])
    def test_config_validation(self, kw):
        base = dict(eta=0.5, tau_n=20, tau_d=80, alpha=0.08)
        with pytest.raises(ValueError):
            VrfConfig(**{**base, **kw})


class TestStatistic:
    cfg = VrfConfig(0.5, 20, 80, 0.08)

    def test_identity_pair(self):
        g = vrf_statistic(np.eye(2), np.eye(2), self.cfg)
        expected = math.sqrt(0.25 * 2 / C_20_80) - math.sqrt(f_quantile(40, B_20_80, 0.92))
        assert g == pytest.approx(expected, rel=1e-12)
        assert g == pytest.approx(G_IDENTITY, rel=1e-9)

    def test_zero_short_window(self):
        g = vrf_statistic(np.zeros((2, 2)), np.eye(2), self.cfg)
        assert g == pytest.approx(-math.sqrt(f_quantile(40, B_20_80, 0.92)), rel=1e-12)
        assert g < 0

    def test_monotone_in_scale(self):
        rng = np.random.default_rng(9)
        M = rng.normal(size=(2, 2))
        S = M @ M.T + 0.1 * np.eye(2)
        gs = [vrf_statistic(k * S, S, self.cfg) for k in np.linspace(0.1, 10, 40)]
        assert np.all(np.diff(gs) > 0)

    def test_singular_long_window(self):
        assert vrf_statistic(np.eye(2), np.diag([1.0, 0.0]), self.cfg) == -math.inf
        assert vrf_statistic(np.eye(2), np.diag([1.0, 1e-14]), self.cfg) == -math.inf


class TestForgettingFactor:
    def test_examples(self):
        assert forgetting_factor(-3.0, 0.7) == 1.0
        assert forgetting_factor(2.0, 0.5) == 0.5
        assert forgetting_factor(0.0, 5.0) == 1.0

    @given(st.floats(-1e6, 1e6), st.floats(0, 1e3))
    def test_range(self, g, eta):
        lam = forgetting_factor(g, eta)
        assert 0.0 < lam <= 1.0
        if g <= 0:
            assert lam == 1.0

    @given(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3), st.floats(1e-3, 1e3))
    def test_strictly_decreasing(self, g, dg, eta):
        assert forgetting_factor(g + dg, eta) < forgetting_factor(g, eta)


class TestVrfEr:
    er = ErConfig.scaled_identity(50.0, 1)

    def test_lambda_one_matches_classic(self):
        rng = np.random.default_rng(12)
        s = RlsState.initial(np.eye(3))
        er = ErConfig.scaled_identity(5.0, 3)
        for _ in range(20):
            Phi, z = rng.normal(size=(2, 3)), rng.normal(size=2)
            a = rls_update_classic(s, Phi, z, np.eye(2))
            b = rls_update_vrf_er(s, Phi, z, np.eye(2), 1.0, er)
            np.testing.assert_array_equal(a.theta, b.theta)
            np.testing.assert_array_equal(a.P, b.P)
            s = a

    def test_scalar_resetting(self):
        s = RlsState(np.zeros(1), np.array([[4.0]]))
        s2 = rls_update_vrf_er(s, np.zeros((2, 1)), np.zeros(2), np.eye(2), 0.5, self.er)
        assert 1.0 / s2.P[0, 0] == pytest.approx(25.125, rel=1e-14)

    def test_information_form_oracle(self):
        rng = np.random.default_rng(21)
        l = 4
        er = ErConfig(np.diag(rng.uniform(1, 10, size=l)))
        s = RlsState.initial(np.eye(l))
        Omega, theta = np.eye(l), np.zeros(l)
        R = np.diag([1.0, 0.3])
        for _ in range(60):
            Phi, z = rng.normal(size=(2, l)), rng.normal(size=2)
            lam = float(rng.uniform(0.3, 1.0))
            s = rls_update_vrf_er(s, Phi, z, R, lam, er)
            prior = lam * Omega + (1 - lam) * er.R_inf
            Omega = prior + Phi.T @ R @ Phi
            theta = np.linalg.solve(Omega, prior @ theta - Phi.T @ R @ z)
        np.testing.assert_allclose(s.theta, theta, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(s.P, np.linalg.inv(Omega), rtol=1e-9, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_eigenvalue_bound(self, l, seed):
        rng = np.random.default_rng(seed)
        er = ErConfig(np.diag(rng.uniform(0.5, 20, size=l)))
        M = rng.normal(size=(l, l))
        s = RlsState(np.zeros(l), M @ M.T + 0.01 * np.eye(l))
        bound = er.eig_max_inverse
        for _ in range(40):
            prev = np.linalg.eigvalsh(s.P)[-1]
            lam = float(rng.uniform(0.05, 1.0))
            s = rls_update_vrf_er(s, rng.normal(size=(2, l)) * rng.uniform(0, 3), rng.normal(size=2),
                                  np.diag(rng.uniform(1e-7, 2, size=2)), lam, er)
            ev = np.linalg.eigvalsh(s.P)
            assert ev[-1] <= max(prev, bound) + 1e-10
            assert ev[0] > 1e-14

    def test_lambda_range_checked(self):
        s = RlsState(np.zeros(1), np.eye(1))
        with pytest.raises(ValueError):
            rls_update_vrf_er(s, np.zeros((2, 1)), np.zeros(2), np.eye(2), 0.0, self.er)

    def test_er_not_positive_definite(self):
        with pytest.raises(ValueError):
            ErConfig(np.diag([1.0, -1.0]))


class TestStreamingForgetting:
    def test_warm_up_then_reacts(self):
        cfg = VrfConfig(0.5, 20, 80, 0.08)
        vrf = VariableRateForgetting(cfg)
        rng = np.random.default_rng(0)
        for k in range(79):
            lam, g = vrf.update(rng.normal(size=2))
            assert lam == 1.0 and math.isnan(g)
        lam, g = vrf.update(rng.normal(size=2))
        assert not math.isnan(g)
        # a tenfold jump in residual size shows up as forgetting
        lams = [vrf.update(10 * rng.normal(size=2))[0] for _ in range(20)]
        assert min(lams) < 1.0
        assert all(0 < v <= 1 for v in lams)
