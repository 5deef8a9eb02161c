"""Special-function accuracy against high-precision oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percap.errors import DomainError
from percap.specfun import (
    QuadratureRule,
    gauss_integral,
    gauss_integral_above,
    inverse_mills,
    log_std_normal_sf,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    std_normal_rule,
)

import oracles

# frozen from tests/oracles.py (mpmath at 50 digits)
PHI_AT_1_959964 = 0.9750000009035576
QUANTILE_09 = 1.2815515655446006
QUANTILE_0975 = 1.9599639845400538
MILLS_AT_0 = 0.7978845608028654  # sqrt(2/pi)
KINK_INTEGRAL_KAPPA1 = 1.9246602166562292  # (1+k^2)Phi(k)+k*phi(k) at k=1


class TestStdNormalCdf:
    def test_zero_is_half(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_frozen_point(self):
        assert abs(std_normal_cdf(1.959964) - PHI_AT_1_959964) < 1e-15
        assert abs(std_normal_cdf(1.959964) - 0.975) < 1e-9

    def test_against_oracle_grid(self):
        for x in np.linspace(-8.0, 8.0, 81):
            assert abs(std_normal_cdf(float(x)) - float(oracles.phi_mp(x))) < 1e-14

    def test_reflection(self):
        for x in np.linspace(-8.0, 8.0, 101):
            assert abs(std_normal_cdf(float(x)) + std_normal_cdf(float(-x)) - 1.0) < 1e-14

    def test_monotone_on_grid(self):
        grid = np.linspace(-8.0, 8.0, 10_000)
        values = np.array([std_normal_cdf(float(x)) for x in grid])
        assert np.all(np.diff(values) >= 0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            std_normal_cdf(math.nan)
        with pytest.raises(DomainError):
            std_normal_cdf(math.inf)


class TestQuantile:
    def test_median(self):
        assert std_normal_quantile(0.5) == 0.0

    def test_frozen_points(self):
        assert abs(std_normal_quantile(0.9) - QUANTILE_09) < 1e-8
        assert abs(std_normal_quantile(0.975) - QUANTILE_0975) < 1e-6
        assert abs(std_normal_quantile(0.975) - 1.959964) < 1e-6

    def test_cdf_residual(self):
        for p in [1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1 - 1e-9]:
            x = std_normal_quantile(p)
            assert abs(std_normal_cdf(x) - p) <= 1e-12

    def test_round_trip(self):
        # Above x ~ 5.35 the float64 rounding of Phi(x) (to within eps/2 of 1)
        # alone moves the round trip by eps/(2 phi(x)) > 1e-9; no quantile can
        # undo that, so the bound there is the representation limit itself.
        eps_half = 0.5 * 2.0**-52
        for x in np.linspace(-6.0, 6.0, 241):
            back = std_normal_quantile(std_normal_cdf(float(x)))
            forced = eps_half / float(std_normal_pdf(x)) if x > 0 else 0.0
            assert abs(back - x) <= 1e-9 + forced

    def test_round_trip_strict_where_representable(self):
        for x in np.linspace(-6.0, 5.3, 227):
            back = std_normal_quantile(std_normal_cdf(float(x)))
            assert abs(back - x) <= 1e-9

    @given(st.floats(min_value=1e-15, max_value=1.0, exclude_max=True))
    @settings(max_examples=200, deadline=None)
    def test_quantile_in_order(self, p):
        x = std_normal_quantile(p)
        assert math.isfinite(x)
        assert abs(std_normal_cdf(x) - p) <= 1e-12

    def test_domain(self):
        for p in (0.0, 1.0, -0.2, 1.3, math.nan):
            with pytest.raises(DomainError):
                std_normal_quantile(p)


class TestInverseMills:
    def test_at_zero(self):
        assert abs(inverse_mills(0.0) - MILLS_AT_0) < 1e-15

    def test_large_positive(self):
        value = inverse_mills(10.0)
        assert 10.0 < value < 10.1
        assert abs(value - float(oracles.inverse_mills_mp(10.0))) < 1e-12

    def test_large_negative_underflows_cleanly(self):
        assert inverse_mills(-20.0) < 1e-80
        assert inverse_mills(-20.0) > 0.0

    def test_oracle_grid(self):
        for u in np.linspace(-30.0, 40.0, 141):
            mine = inverse_mills(float(u))
            ref = float(oracles.inverse_mills_mp(u))
            assert mine == pytest.approx(ref, rel=5e-13, abs=1e-300)

    def test_strictly_increasing_and_bounds(self):
        grid = np.linspace(-8.0, 30.0, 2000)
        values = np.array([inverse_mills(float(u)) for u in grid])
        assert np.all(np.diff(values) > 0.0)
        assert np.all(values > np.maximum(grid, 0.0))

    def test_first_order_mills_bound(self):
        for u in np.linspace(5.0, 40.0, 71):
            gap = inverse_mills(float(u)) - u
            assert 0.0 < gap <= 1.0 / u


class TestLogSf:
    def test_matches_oracle_in_easy_range(self):
        import mpmath as mp

        for u in np.linspace(-5.0, 5.0, 41):
            ref = float(mp.log(oracles.sf_mp(u)))
            assert float(log_std_normal_sf(u)) == pytest.approx(ref, rel=1e-13)

    def test_no_underflow_far_out(self):
        value = float(log_std_normal_sf(100.0))
        # ln(1-Phi(u)) ~ -u^2/2 - ln(u sqrt(2 pi)) for large u
        approx = -0.5 * 100.0**2 - math.log(100.0 * math.sqrt(2 * math.pi))
        assert value == pytest.approx(approx, rel=1e-4)


class TestQuadrature:
    def test_rule_invariants(self):
        rule = std_normal_rule(200)
        assert rule.order == 200
        assert abs(float(rule.weights.sum()) - 1.0) <= 1e-12
        assert np.all(np.diff(rule.nodes) > 0.0)

    def test_normalization_and_variance(self):
        assert gauss_integral(lambda t: np.ones_like(t)) == pytest.approx(1.0, abs=1e-12)
        assert gauss_integral(lambda t: t**2) == pytest.approx(1.0, abs=1e-12)

    def test_moments_to_eighth(self):
        for k in range(0, 9):
            want = float(oracles.gaussian_moment(k))
            got = gauss_integral(lambda t, k=k: t**k)
            assert got == pytest.approx(want, abs=1e-10)

    def test_high_degree_polynomial_exact(self):
        # degree 2*order-1 exactness, probed at degree 99 on a small rule
        rule = std_normal_rule(50)
        got = gauss_integral(lambda t: t**98, rule)
        want = float(oracles.gaussian_moment(98))
        assert got == pytest.approx(want, rel=1e-12)

    def test_kinked_integrand_split(self):
        kappa = 1.0
        got = gauss_integral_above(lambda t: (t + kappa) ** 2, -kappa)
        assert got == pytest.approx(KINK_INTEGRAL_KAPPA1, abs=1e-9)
        assert got == pytest.approx(1.9246603, abs=1e-7)

    def test_kink_vs_closed_form_grid(self):
        for kappa in [0.0, 0.25, 0.5, 1.5, 2.5]:
            got = gauss_integral_above(lambda t, k=kappa: (t + k) ** 2, -kappa)
            want = 1.0 / oracles.capacity_closed_form(kappa)
            assert got == pytest.approx(want, abs=1e-10)

    def test_rule_validation(self):
        with pytest.raises(DomainError):
            QuadratureRule(nodes=np.array([0.0, -1.0]),
                           weights=np.array([0.5, 0.5]), order=2)
        with pytest.raises(DomainError):
            QuadratureRule(nodes=np.array([-1.0, 1.0]),
                           weights=np.array([0.7, 0.5]), order=2)

    def test_non_finite_integrand_rejected(self):
        with pytest.raises(DomainError):
            gauss_integral(lambda t: np.where(t > 0, np.inf, 1.0))


def test_pdf_matches_oracle():
    for x in (-3.0, 0.0, 1.0, 5.5):
        assert float(std_normal_pdf(x)) == pytest.approx(
            float(oracles.pdf_mp(x)), rel=1e-14)
