import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gammaln

from ldps import special
from ldps.errors import BelowCrossover, ConfigError, InconsistentRegimes
from ldps.special import (
    EvalResult,
    Method,
    PrabhakarParams,
    asymptotic_coefficients,
    log_pochhammer,
    pochhammer,
    prabhakar_asymptotic,
    prabhakar_derivative_log,
    prabhakar_eval,
    prabhakar_reduce_integer_gamma,
    prabhakar_series,
    reduction_coefficients,
)

# mpmath at 40 digits, frozen
LOG_E_05_1_1_30 = 900.69314718055994531
LOG_E_05_2_3_40 = 1608.7643657205298084
E_05_1_2_4 = 586483294.34605416078
LOG_E_075_15_2_5 = 10.227023256083617389
LOG_E_05_1_1_9 = 81.693147180559945309


def P(a, b, g, lam=1.0):
    return PrabhakarParams(a, b, g, lam)


def _mp_log_prabhakar(mp, a, b, g, z):
    # explicit sum well past the peak at k ~ z**(1/a) / a; nsum's extrapolation misses it
    w = float(z) ** (1.0 / a)
    n = int(3 * w / a + 20 * g + 200)
    a, b, g, z = map(mp.mpf, (a, b, g, z))
    s = mp.fsum(mp.rf(g, k) * z**k / (mp.factorial(k) * mp.gamma(a * k + b)) for k in range(n))
    return float(mp.log(s))


class TestPochhammer:
    def test_examples(self):
        assert pochhammer(2.5, 0) == 1.0
        assert pochhammer(1.0, 3) == 6.0
        assert pochhammer(0.5, 2) == 0.75

    def test_log_twin_large_k(self):
        assert log_pochhammer(1.0, 500) == pytest.approx(math.lgamma(501.0), rel=1e-14)
        with pytest.raises(OverflowError):
            pochhammer(1.0, 500)

    def test_negative_k(self):
        with pytest.raises(ConfigError):
            pochhammer(1.0, -1)

    @given(st.floats(0.1, 20.0), st.integers(0, 40))
    def test_log_matches_product(self, g, k):
        assert math.log(pochhammer(g, k)) == pytest.approx(log_pochhammer(g, k), abs=1e-12, rel=1e-13)


class TestParams:
    @pytest.mark.parametrize(
        "kw, msg",
        [
            (dict(alpha=1.5, beta=1, gamma=1), "alpha must lie in (0,1]"),
            (dict(alpha=0.0, beta=1, gamma=1), "alpha must lie in (0,1]"),
            (dict(alpha=0.5, beta=0, gamma=1), "beta must be > 0"),
            (dict(alpha=0.5, beta=1, gamma=-1), "gamma must be > 0"),
            (dict(alpha=0.5, beta=1, gamma=1, lam=0), "lambda must be > 0"),
            (dict(alpha=float("nan"), beta=1, gamma=1), "alpha must be a finite"),
        ],
    )
    def test_rejects(self, kw, msg):
        with pytest.raises(ConfigError, match=msg.replace("(", r"\(").replace("]", r"\]")):
            PrabhakarParams(**kw)

    def test_eval_result_value(self):
        r = EvalResult(1.0, Method.SERIES, 0.0)
        assert r.value == pytest.approx(math.e)


class TestSeries:
    def test_exponential(self):
        r = prabhakar_series(P(1, 1, 1), 1.0, 1e-15)
        assert r.log_value == pytest.approx(1.0, abs=1e-15)
        assert r.method_used is Method.SERIES

    def test_e_minus_one(self):
        r = prabhakar_series(P(1, 2, 1), 1.0, 1e-15)
        assert math.exp(r.log_value) == pytest.approx(math.e - 1.0, rel=1e-15)

    @pytest.mark.parametrize("b", [0.3, 1.0, 1.5, 4.0])
    def test_zero_argument(self, b):
        r = prabhakar_series(P(0.7, b, 2.2), 0.0, 1e-10)
        assert r.log_value == -gammaln(b)
        assert r.est_rel_error == 0.0

    def test_frozen_values(self):
        assert prabhakar_series(P(0.75, 1.5, 2), 5.0).log_value == pytest.approx(LOG_E_075_15_2_5, rel=1e-14)
        assert prabhakar_series(P(0.5, 1, 1), 30.0).log_value == pytest.approx(LOG_E_05_1_1_30, rel=1e-14)
        assert prabhakar_series(P(0.5, 2, 3), 40.0).log_value == pytest.approx(LOG_E_05_2_3_40, rel=1e-14)
        assert math.exp(prabhakar_series(P(0.5, 1, 2), 4.0).log_value) == pytest.approx(E_05_1_2_4, rel=1e-13)

    def test_lambda_scales_argument(self):
        a = prabhakar_series(P(0.6, 1.2, 1.7, 2.5), 2.0).log_value
        b = prabhakar_series(P(0.6, 1.2, 1.7, 1.0), 5.0).log_value
        assert a == pytest.approx(b, rel=1e-15)

    def test_error_estimate_is_honest(self):
        r = prabhakar_series(P(0.75, 1.5, 2), 5.0)
        assert 0.0 <= r.est_rel_error < 1e-10
        assert abs(r.log_value - LOG_E_075_15_2_5) <= r.est_rel_error * abs(LOG_E_075_15_2_5) + 1e-15

    def test_rejects_bad_inputs(self):
        with pytest.raises(ConfigError):
            prabhakar_series(P(1, 1, 1), -1.0)
        with pytest.raises(ConfigError):
            prabhakar_series(P(1, 1, 1), 1.0, rel_tol=2.0)

    def test_nonconvergence_signal(self):
        with pytest.raises(special.NonConvergence):
            prabhakar_series(P(0.5, 1, 1), 1e4, k_max=1000)

    @pytest.mark.parametrize(
        "a,b,g,u",
        [(0.25, 1.0, 1.0, 3.0), (0.2, 0.3, 3.7, 1.5), (0.6, 2.9, 0.4, 5.5), (1.0, 0.5, 2.5, 20.0), (0.45, 1.7, 1.0, 0.01)],
    )
    def test_against_mpmath(self, mp, a, b, g, u):
        ref = _mp_log_prabhakar(mp, a, b, g, u)
        got = prabhakar_series(P(a, b, g), u).log_value
        assert got == pytest.approx(ref, abs=1e-12, rel=1e-12)


class TestAsymptotic:
    def test_exponential(self):
        r = prabhakar_asymptotic(P(1, 1, 1), 50.0)
        assert r.log_value == 50.0
        assert r.method_used is Method.ASYMPTOTIC
        assert r.est_rel_error < 1e-12

    def test_alpha_half(self):
        r = prabhakar_asymptotic(P(0.5, 1, 1), 30.0)
        # leading term 900 + log(1/alpha)
        assert r.log_value == pytest.approx(900.0 + math.log(2.0), abs=1e-12)
        assert r.log_value == pytest.approx(LOG_E_05_1_1_30, abs=1e-9)

    def test_gamma_three_against_series(self):
        asy = prabhakar_asymptotic(P(0.5, 2, 3), 40.0)
        ser = prabhakar_series(P(0.5, 2, 3), 40.0)
        assert abs(asy.log_value - ser.log_value) / ser.log_value <= 1e-6
        # the linear-scale gap is the first dropped term c1/w, which the estimate covers
        gap = abs(math.expm1(asy.log_value - ser.log_value))
        assert gap <= asy.est_rel_error

    def test_below_crossover(self):
        with pytest.raises(BelowCrossover):
            prabhakar_asymptotic(P(0.5, 1, 1), 3.0)

    @pytest.mark.parametrize("a,b,g", [(0.5, 2, 3), (0.75, 1.5, 2), (1.0, 1.0, 4), (0.5, 0.5, 0.7), (0.3, 2.5, 1.5)])
    def test_coefficients_explain_gap(self, a, b, g):
        c1, c2 = asymptotic_coefficients(a, b, g)
        u = 60.0**a
        w = u ** (1 / a)
        ser = prabhakar_series(P(a, b, g), u).log_value
        asy = prabhakar_asymptotic(P(a, b, g), u).log_value
        corrected = asy + math.log1p(c1 / w + c2 / w**2)
        assert abs(corrected - ser) <= 50.0 / w**3 + 1e-12
        assert abs(corrected - ser) < abs(asy - ser) or abs(asy - ser) < 1e-12

    def test_gamma_one_has_no_power_corrections(self):
        for a in (0.3, 0.5, 1.0):
            for b in (0.5, 1.0, 2.0):
                assert asymptotic_coefficients(a, b, 1.0) == (0.0, 0.0)


def _poly_identity_coeffs(alpha, beta, m):
    """d_j from (s+1)...(s+m) = alpha**-m sum_j d_j prod_{i<=j} (alpha s + beta - i), at 50 digits."""
    import mpmath as mp

    mp.mp.dps = 50
    rows, rhs = [], []
    for s in range(m):
        lhs = mp.mpf(1)
        for i in range(1, m + 1):
            lhs *= s + i
        row = []
        for j in range(m + 1):
            pr = mp.mpf(1)
            for i in range(1, j + 1):
                pr *= alpha * s + beta - i
            row.append(pr)
        rows.append(row[:m])
        rhs.append(lhs * mp.mpf(alpha) ** m - row[m])
    sol = mp.lu_solve(mp.matrix(rows), mp.matrix(rhs))
    return [float(x) for x in sol] + [1.0]


class TestReduction:
    def test_passthrough(self):
        p = P(0.5, 1.0, 1.0)
        assert prabhakar_reduce_integer_gamma(p, 3.0).log_value == prabhakar_series(p, 3.0).log_value
        assert reduction_coefficients(0.5, 1.0, 1) == (1.0,)

    def test_example_alpha_half(self):
        p = P(0.5, 1, 2)
        red = prabhakar_reduce_integer_gamma(p, 4.0)
        assert red.method_used is Method.INTEGER_GAMMA_REDUCTION
        assert math.exp(red.log_value) == pytest.approx(E_05_1_2_4, rel=1e-8)
        assert abs(math.expm1(red.log_value - prabhakar_series(p, 4.0).log_value)) <= 1e-8

    def test_two_e(self):
        r = prabhakar_reduce_integer_gamma(P(1, 1, 2), 1.0)
        assert math.exp(r.log_value) == pytest.approx(2 * math.e, rel=1e-12)

    def test_zero_argument(self):
        assert prabhakar_reduce_integer_gamma(P(0.5, 1.5, 3), 0.0).log_value == -gammaln(1.5)

    @pytest.mark.parametrize("g", [2, 3, 4])
    @pytest.mark.parametrize("a,b", [(0.5, 1.0), (0.75, 1.5), (1.0, 2.0), (0.6, 0.8)])
    def test_grid_against_series(self, a, b, g):
        p = P(a, b, g)
        for u in np.linspace(0.5, 10.0, 12):
            red = prabhakar_reduce_integer_gamma(p, u).log_value
            ser = prabhakar_series(p, u).log_value
            assert abs(math.expm1(red - ser)) <= 1e-8

    @pytest.mark.parametrize("g", [2, 3, 4])
    @pytest.mark.parametrize("a,b", [(0.5, 1.0), (0.75, 1.5), (1.0, 2.0), (0.3, 0.7)])
    def test_coefficients_match_polynomial_identity(self, a, b, g):
        got = reduction_coefficients(a, b, g)
        ref = _poly_identity_coeffs(a, b, g - 1)
        np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-10)

    def test_first_coefficient_closed_form(self):
        for a, b in [(0.5, 1.0), (0.8, 2.3), (1.0, 1.0)]:
            d0, d1 = reduction_coefficients(a, b, 2)
            assert d1 == 1.0
            assert d0 == pytest.approx(1 + a - b, abs=1e-10)

    def test_rejects_non_integer(self):
        with pytest.raises(ConfigError):
            prabhakar_reduce_integer_gamma(P(0.5, 1, 2.5), 1.0)


class TestEval:
    def test_exponential(self):
        assert prabhakar_eval(P(1, 1, 1), 2.0).log_value == pytest.approx(2.0, abs=1e-15)

    def test_large_argument(self):
        r = prabhakar_eval(P(0.5, 1, 1, 2.0), 100.0)
        # E_{1/2,1}(z) = 2 exp(z**2) up to exponentially small terms
        assert r.log_value == pytest.approx(40000.0 + math.log(2.0), rel=1e-14)

    def test_zero(self):
        assert prabhakar_eval(P(0.75, 1.5, 2), 0.0).log_value == -gammaln(1.5)

    @pytest.mark.parametrize("a", [0.5, 0.75, 1.0])
    @pytest.mark.parametrize("b", [1.0, 2.0])
    def test_crossover_band(self, a, b):
        p = P(a, b, 1.0)
        for w in np.linspace(25.5, 34.5, 10):
            u = w**a
            ser = prabhakar_series(p, u)
            asy = prabhakar_asymptotic(p, u)
            gap = abs(math.expm1(asy.log_value - ser.log_value))
            assert gap <= max(10 * (ser.est_rel_error + asy.est_rel_error), 1e-5)
            r = prabhakar_eval(p, u)
            assert r.disagreement is not None and r.disagreement == pytest.approx(gap)

    @pytest.mark.parametrize("a,b,g", [(0.5, 1, 2), (0.5, 2, 3), (0.75, 1.5, 2), (1, 1, 4), (0.5, 1, 1)])
    def test_crossover_band_no_inconsistency(self, a, b, g):
        for w in np.linspace(25.01, 34.99, 10):
            prabhakar_eval(P(a, b, g), w**a)

    def test_inconsistent_regimes(self, monkeypatch):
        real = special.prabhakar_asymptotic

        def skewed(p, u, **kw):
            r = real(p, u, **kw)
            return EvalResult(r.log_value + 0.5, r.method_used, r.est_rel_error, truncation_error=r.truncation_error)

        monkeypatch.setattr(special, "prabhakar_asymptotic", skewed)
        with pytest.raises(InconsistentRegimes):
            prabhakar_eval(P(1, 1, 1), 30.0)

    def test_cross_check(self):
        r = prabhakar_eval(P(0.5, 1, 3), 2.0, cross_check=True)
        assert r.disagreement is not None and r.disagreement < 1e-10

    def test_dispatch(self):
        assert prabhakar_eval(P(0.5, 1, 1), 4.0).method_used is Method.SERIES
        assert prabhakar_eval(P(0.5, 1, 1), 50.0).method_used is Method.ASYMPTOTIC
        # gamma != 1: the asymptotic truncation error is too large, the series is used
        assert prabhakar_eval(P(0.5, 1, 2), 50.0).method_used is Method.SERIES

    @pytest.mark.parametrize("a,b,g,lam", [(0.5, 1, 2, 1), (0.5, 1, 1, 1), (1, 1, 1, 1), (0.75, 1.5, 2, 0.5), (0.5, 2, 3, 1)])
    def test_monotone_in_u(self, a, b, g, lam):
        vals = [prabhakar_eval(P(a, b, g, lam), u).log_value for u in np.linspace(0.0, 100.0, 51)]
        assert all(y > x for x, y in zip(vals, vals[1:]))

    def test_exponential_anchor(self):
        for u in np.linspace(0.0, 30.0, 61):
            assert abs(math.expm1(prabhakar_eval(P(1, 1, 1), u).log_value - u)) <= 1e-12


class TestDerivative:
    def test_exponential(self):
        assert prabhakar_derivative_log(P(1, 1, 1), 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_scaled_exponential(self):
        assert prabhakar_derivative_log(P(1, 1, 1, 2.0), 1.0) == pytest.approx(math.log(2) + 2, abs=1e-14)

    def test_frozen(self):
        # d/du E_{1/2,1}(u) at u=9 through mpmath differentiation: log = 84.5835189384561100
        assert prabhakar_derivative_log(P(0.5, 1, 1), 9.0) == pytest.approx(84.583518938456110002, rel=1e-14)

    @pytest.mark.parametrize("a,b,g,lam", [(0.5, 1, 1, 1), (0.5, 1, 2, 1), (0.75, 1.5, 2, 1), (1, 2, 3, 0.7)])
    def test_finite_difference(self, a, b, g, lam):
        p = P(a, b, g, lam)
        for u in np.linspace(1.0, 20.0, 8):
            h = 1e-5 * u
            up = prabhakar_eval(p, u + h).log_value
            dn = prabhakar_eval(p, u - h).log_value
            mid = prabhakar_eval(p, u).log_value
            # central difference of E, kept on the log scale
            fd_log = mid + math.log((math.exp(up - mid) - math.exp(dn - mid)) / (2 * h))
            got = prabhakar_derivative_log(p, u)
            assert abs(math.expm1(got - fd_log)) <= 1e-4

    def test_rejects_zero(self):
        with pytest.raises(ConfigError):
            prabhakar_derivative_log(P(1, 1, 1), 0.0)
