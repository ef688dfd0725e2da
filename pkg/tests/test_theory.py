"""Growth function, critical radius, and the reference rate formulas."""

import numpy as np
import pytest

from sampled_fpca import (
    critical_radius,
    growth_function,
    make_time_sampling,
    minimax_lower_bounds,
    predicted_rates,
    uniform_points,
)


class TestGrowthFunction:
    def test_zero_argument(self):
        mu = np.array([1.0, 0.5, 0.1])
        assert growth_function(mu, 2, 1.5, 0.0) == 0.0

    def test_saturation_at_large_t(self):
        mu = np.array([1.0, 0.5, 0.1])
        r, rho = 2, 1.5
        sat = np.sqrt(r * rho**2 * mu.sum())
        assert growth_function(mu, r, rho, 1e9) == pytest.approx(sat, rel=1e-14)

    def test_hand_value(self):
        # m=2, mu=(1, 1/4), r=1, rho=1, t=1/2: sqrt(min(1/4,1) + min(1/4,1/4))
        val = growth_function(np.array([1.0, 0.25]), 1, 1.0, 0.5)
        assert val == pytest.approx(np.sqrt(0.5), rel=1e-14)

    def test_monotone_and_ratio_nonincreasing(self):
        mu = np.arange(1, 65, dtype=float) ** -2.0
        ts = np.logspace(-5, 2, 60)
        vals = np.array([growth_function(mu, 2, 1.3, t) for t in ts])
        assert np.all(np.diff(vals) >= -1e-14)
        ratios = vals / ts
        assert np.all(np.diff(ratios) <= 1e-14)

    def test_requires_sorted(self):
        with pytest.raises(ValueError):
            growth_function(np.array([0.1, 1.0]), 1, 1.0, 0.5)


class TestCriticalRadius:
    def test_noiseless_is_zero(self):
        mu = np.arange(1, 33, dtype=float) ** -2.0
        assert critical_radius(mu, 1, 1.0, 0.0, 100) == 0.0

    def test_defining_inequality_holds_tightly(self):
        mu = np.arange(1, 129, dtype=float) ** -2.0
        for n in (50, 5000):
            eps = critical_radius(mu, 2, 1.5, 0.7, n)
            lhs = (0.7 / np.sqrt(n)) * 2**1.5 * growth_function(mu, 2, 1.5, eps)
            assert lhs <= eps**2 * (1 + 1e-9)
            # just below eps the inequality must fail: eps is the smallest root
            shrunk = eps / 1.05
            lhs2 = (0.7 / np.sqrt(n)) * 2**1.5 * growth_function(mu, 2, 1.5, shrunk)
            assert lhs2 > shrunk**2

    def test_polynomial_closed_form_tracking(self):
        # mu_j = j^(-2 alpha): eps^2 tracks [sigma^2 r^3 (sqrt(r) rho)^(1/alpha) / n]^(2a/(2a+1))
        alpha = 1.0
        mu = np.arange(1, 257, dtype=float) ** (-2 * alpha)
        r, rho, sigma = 1, 1.0, 1.0
        expo = 2 * alpha / (2 * alpha + 1)
        for n in (100, 1000, 10_000, 100_000, 1_000_000):
            eps = critical_radius(mu, r, rho, sigma, n)
            closed = (sigma**2 * r**3 * (np.sqrt(r) * rho) ** (1 / alpha) / n) ** expo
            assert closed / 4 <= eps**2 <= closed * 4

    def test_doubling_n_scaling(self):
        mu = np.arange(1, 513, dtype=float) ** -2.0
        target = 2.0 ** (-2.0 / 3.0)
        for n in (200, 2000, 20_000):
            e1 = critical_radius(mu, 1, 1.0, 1.0, n)
            e2 = critical_radius(mu, 1, 1.0, 1.0, 2 * n)
            ratio = e2**2 / e1**2
            assert target * 0.85 <= ratio <= target * 1.15

    def test_monotonicity_in_n_and_sigma(self):
        mu = np.arange(1, 65, dtype=float) ** -2.0
        eps_n = [critical_radius(mu, 1, 1.0, 1.0, n) for n in (10, 100, 1000)]
        assert np.all(np.diff(eps_n) < 0)
        eps_s = [critical_radius(mu, 1, 1.0, s, 100) for s in (0.1, 0.5, 2.0)]
        assert np.all(np.diff(eps_s) > 0)

    def test_from_operator_eigenvalues(self, sobolev):
        op = make_time_sampling(sobolev, uniform_points(64))
        eps = critical_radius(op.mu_hats, 1, np.pi / 2, 1.0 / 8.0, 500)
        assert 0 < eps < 1


class TestPredictedRates:
    def test_time_sampling_terms(self):
        # alpha=1, sigma0=1, r=1, rho=1, m=n=1e4: estimation (1e-8)^(2/3)
        pred = predicted_rates("time", 1.0, 1, 1.0, 1.0, 10_000, 10_000)
        assert pred.estimation_term == pytest.approx(4.6415888336e-6, rel=1e-9)
        assert pred.fast_term == pytest.approx(1e-4, rel=1e-12)
        assert pred.approximation_term == pytest.approx(1e-8, rel=1e-12)
        assert pred.exponent == pytest.approx(-2.0 / 3.0)
        assert pred.driving == "mn"

    def test_estimation_beats_fast_when_m_large(self):
        # with m >= n^(1/(2 alpha)) the estimation branch is the smaller one
        for n in (100, 10_000):
            m = n  # m = n >= sqrt(n)
            pred = predicted_rates("time", 1.0, 1, 1.0, 1.0, m, n)
            assert pred.estimation_term <= pred.fast_term

    def test_truncation_independent_of_m(self):
        p1 = predicted_rates("truncation", 1.0, 2, 2.0, 1.0, 64, 1000)
        p2 = predicted_rates("truncation", 1.0, 2, 2.0, 1.0, 4096, 1000)
        assert p1.estimation_term == p2.estimation_term
        assert np.isinf(p1.fast_term)  # fast rate unachievable under truncation
        assert p1.approximation_term > p2.approximation_term

    def test_exponent_range(self):
        for alpha in (0.6, 1.0, 2.0):
            pred = predicted_rates("time", alpha, 1, 1.0, 1.0, 100, 100)
            assert -1.0 < pred.exponent < 0.0


class TestMinimaxLowerBounds:
    def test_time_arithmetic(self):
        low = minimax_lower_bounds("time", 1.0, 1.0, 1000, 1000)
        assert low.estimation_term == pytest.approx((1e-6) ** (2.0 / 3.0), rel=1e-12)
        assert low.approximation_term == pytest.approx(1e-6, rel=1e-12)
        assert low.total == pytest.approx(1e-4 + 1e-6, rel=1e-9)

    def test_truncation_first_term_m_free(self):
        l1 = minimax_lower_bounds("truncation", 1.0, 1.0, 32, 500)
        l2 = minimax_lower_bounds("truncation", 1.0, 1.0, 1024, 500)
        assert l1.estimation_term == l2.estimation_term

    def test_truncation_regime_flag(self):
        # the n-driven term binds only once m >= (c0 n)^(1/(2 alpha + 1))
        low = minimax_lower_bounds("truncation", 1.0, 1.0, 2, 1000)
        assert low.truncation_regime_ok is False
        low2 = minimax_lower_bounds("truncation", 1.0, 1.0, 50, 1000)
        assert low2.truncation_regime_ok is True

    def test_large_m_limit(self):
        low = minimax_lower_bounds("time", 1.0, 1.0, 10**9, 1000)
        assert low.approximation_term <= 1e-17
        assert low.total == pytest.approx(min(low.estimation_term, low.fast_term), rel=1e-6)

    def test_exponents_match_achievable(self):
        for kind in ("time", "truncation"):
            for alpha in (0.75, 1.0, 1.5):
                up = predicted_rates(kind, alpha, 1, 1.0, 1.0, 128, 256)
                low = minimax_lower_bounds(kind, alpha, 1.0, 128, 256)
                assert up.exponent == low.exponent

    def test_upper_bounds_dominate_lower_shapes(self):
        # same exponents: the ratio of achievable to lower-bound estimation
        # terms is a constant in (m, n) on a grid (constants differ, shapes match)
        ratios = set()
        for n in (100, 400, 1600):
            up = predicted_rates("time", 1.0, 1, 1.0, 1.0, n, n)
            low = minimax_lower_bounds("time", 1.0, 1.0, n, n)
            ratios.add(round(up.estimation_term / low.estimation_term, 9))
        assert len(ratios) == 1
        assert ratios.pop() >= 1.0
