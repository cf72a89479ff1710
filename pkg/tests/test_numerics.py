import math

import numpy as np
import pytest

from evoclim.numerics import (
    DomainError,
    NonConvergenceError,
    QuadratureSpec,
    RngStream,
    hyp_ratio_cosh_cosh,
    hyp_ratio_sinh_cosh,
    integrate,
    log_cosh,
    stencil_derivative,
)

# extended-precision oracles (mpmath, 60 digits)
TANH_1 = 0.76159415595576488812
SINH500_COSH1000 = 7.1245764067412855315e-218
INV_COSH_1 = 0.64805427366388539957


class TestHypRatios:
    def test_sinh_cosh_zero(self):
        assert hyp_ratio_sinh_cosh(0.0, 0.0) == 0.0

    def test_sinh_cosh_equal_args_is_tanh(self):
        assert hyp_ratio_sinh_cosh(1.0, 1.0) == pytest.approx(TANH_1, rel=1e-15)

    def test_sinh_cosh_extreme_args_finite(self):
        v = hyp_ratio_sinh_cosh(500.0, 1000.0)
        assert math.isfinite(v)
        assert v == pytest.approx(SINH500_COSH1000, rel=1e-14)

    def test_no_overflow_at_1e6(self):
        assert math.isfinite(hyp_ratio_sinh_cosh(1e6 - 1.0, 1e6))
        assert math.isfinite(hyp_ratio_cosh_cosh(1e6 - 1.0, 1e6))

    def test_cosh_cosh_zero(self):
        assert hyp_ratio_cosh_cosh(0.0, 0.0) == 1.0

    def test_cosh_cosh_inverse_cosh(self):
        assert hyp_ratio_cosh_cosh(0.0, 1.0) == pytest.approx(INV_COSH_1, rel=1e-15)

    def test_cosh_cosh_equal_large(self):
        assert hyp_ratio_cosh_cosh(700.0, 700.0) == 1.0

    def test_domain_error(self):
        with pytest.raises(DomainError):
            hyp_ratio_sinh_cosh(2.0, 1.0)
        with pytest.raises(DomainError):
            hyp_ratio_cosh_cosh(1.0 + 1e-12, 1.0)

    def test_sinh_ratio_below_cosh_ratio(self):
        rng = np.random.default_rng(3)
        a = rng.uniform(0.0, 50.0, 200)
        b = a + rng.uniform(0.0, 50.0, 200)
        assert np.all(hyp_ratio_sinh_cosh(a, b) <= hyp_ratio_cosh_cosh(a, b))

    def test_monotone_increasing_in_a(self):
        b = 12.0
        a = np.linspace(0.0, b, 300)
        assert np.all(np.diff(hyp_ratio_sinh_cosh(a, np.full_like(a, b))) > 0.0)
        assert np.all(np.diff(hyp_ratio_cosh_cosh(a, np.full_like(a, b))) > 0.0)

    def test_vs_naive_in_safe_range(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            b = rng.uniform(0.0, 30.0)
            a = rng.uniform(0.0, b)
            assert hyp_ratio_sinh_cosh(a, b) == pytest.approx(
                math.sinh(a) / math.cosh(b), rel=4e-15
            )
            assert hyp_ratio_cosh_cosh(a, b) == pytest.approx(
                math.cosh(a) / math.cosh(b), rel=4e-15
            )


class TestLogCosh:
    def test_small_matches_naive(self):
        x = np.linspace(-20, 20, 101)
        assert np.allclose(log_cosh(x), np.log(np.cosh(x)), rtol=1e-14, atol=1e-15)

    def test_large_no_overflow(self):
        assert log_cosh(1e6) == pytest.approx(1e6 - math.log(2.0))


class TestIntegrate:
    def test_zero_function(self):
        assert integrate(lambda x: np.zeros_like(x), 0.0, 1.0) == 0.0

    def test_cos_quarter_period(self):
        val = integrate(np.cos, 0.0, math.pi / 2.0)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_u_sinh_vs_dense_trapezoid_oracle(self):
        # independent oracle: 1e7-point trapezoid
        f = lambda u: u * np.sinh(u) / math.cosh(1.0)
        x = np.linspace(0.0, 1.0, 10_000_001)
        oracle = float(np.trapezoid(f(x), x))
        val = integrate(f, 0.0, 1.0)
        assert val == pytest.approx(oracle, abs=5e-11)
        # and against the closed form (cosh(1)-sinh(1))/cosh(1)
        assert val == pytest.approx(0.23840584404423511188, abs=1e-12)

    def test_linearity(self):
        spec = QuadratureSpec()
        f = lambda x: np.sin(3.0 * x)
        g = lambda x: np.exp(-x)
        a, b = 2.5, -1.25
        lhs = integrate(lambda x: a * f(x) + b * g(x), 0.0, 4.0, spec)
        rhs = a * integrate(f, 0.0, 4.0, spec) + b * integrate(g, 0.0, 4.0, spec)
        tol = 2.0 * max(spec.abs_tol, spec.rel_tol * abs(lhs))
        assert abs(lhs - rhs) <= tol

    def test_empty_interval(self):
        assert integrate(np.sin, 2.0, 2.0) == 0.0

    def test_reversed_interval_rejected(self):
        with pytest.raises(DomainError):
            integrate(np.sin, 1.0, 0.0)

    def test_non_convergence_error(self):
        spec = QuadratureSpec(rel_tol=1e-14, abs_tol=1e-300, max_subdivisions=16)
        rough = lambda x: np.abs(np.sin(50.0 * x)) ** 0.3
        with pytest.raises(NonConvergenceError):
            integrate(rough, 0.0, 10.0, spec)

    def test_deterministic(self):
        f = lambda x: np.sin(x) * np.exp(-0.1 * x)
        assert integrate(f, 0.0, 30.0) == integrate(f, 0.0, 30.0)

    def test_oscillatory_full_periods(self):
        # symmetric integrand whose naive single-panel Simpson estimate is 0
        val = integrate(np.sin, 0.0, 2.0 * math.pi)
        assert val == pytest.approx(0.0, abs=1e-10)
        val2 = integrate(lambda x: np.sin(x) ** 2, 0.0, 2.0 * math.pi)
        assert val2 == pytest.approx(math.pi, rel=1e-9)


class TestQuadratureSpec:
    def test_defaults(self):
        spec = QuadratureSpec()
        assert spec.rel_tol == 1e-10
        assert spec.abs_tol == 1e-14
        assert spec.max_subdivisions == 2**15

    @pytest.mark.parametrize(
        "kwargs", [{"rel_tol": 0.0}, {"abs_tol": -1.0}, {"max_subdivisions": 0}]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            QuadratureSpec(**kwargs)


class TestStencilDerivative:
    def test_even_function_first_derivative_zero(self):
        assert stencil_derivative(lambda x: x * x, 0.0, 1) == pytest.approx(0.0, abs=1e-12)

    def test_cubic_third_derivative(self):
        for x0 in (-1.3, 0.0, 2.7):
            d = stencil_derivative(lambda x: x**3, x0, 3, h=1e-2)
            assert d == pytest.approx(6.0, abs=1e-6)

    def test_exp_second_derivative(self):
        d = stencil_derivative(math.exp, 0.0, 2, h=1e-4)
        assert d == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("order,degree", [(1, 2), (2, 3), (3, 4)])
    def test_exact_on_polynomials(self, order, degree):
        # order-k stencil is exact (to rounding) on polynomials of degree <= k+1
        coeffs = [0.7, -1.2, 0.42, 0.31, -0.05][: degree + 1]
        p = np.polynomial.Polynomial(coeffs)
        dp = p.deriv(order)
        for x0 in (-0.8, 0.0, 1.6):
            d = stencil_derivative(p, x0, order, h=0.25)
            assert d == pytest.approx(dp(x0), abs=1e-9)

    def test_propagates_failures(self):
        def bad(x):
            raise FloatingPointError("boom")

        with pytest.raises(FloatingPointError):
            stencil_derivative(bad, 0.0, 1)

    def test_invalid_order(self):
        with pytest.raises(DomainError):
            stencil_derivative(math.sin, 0.0, 4)


class TestRngStream:
    def test_bitwise_reproducible_million_draws(self):
        a = RngStream(seed=987654321, stream_id=7).generator().random(1_000_000)
        b = RngStream(seed=987654321, stream_id=7).generator().random(1_000_000)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(seed=1, stream_id=0).generator().random(1000)
        b = RngStream(seed=1, stream_id=1).generator().random(1000)
        assert not np.array_equal(a, b)

    def test_streams_statistically_independent(self):
        # correlation between adjacent streams should be at noise level
        n = 200_000
        a = RngStream(seed=5, stream_id=0).generator().random(n)
        b = RngStream(seed=5, stream_id=1).generator().random(n)
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 4.0 / math.sqrt(n)

    def test_child_offsets(self):
        base = RngStream(seed=3, stream_id=10)
        assert base.child(5) == RngStream(seed=3, stream_id=15)
