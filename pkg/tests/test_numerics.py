import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from survdom.numerics import (
    RngStream,
    chi_square_sf,
    gamma_quantile,
    reg_lower_gamma,
    sample_exponential,
    sample_gamma,
    std_normal_cdf,
)

mpmath.mp.dps = 50


def erf_series(x):
    """Maclaurin series of erf in 50-digit arithmetic."""
    x = mpmath.mpf(x)
    total = mpmath.mpf(0)
    term = x
    n = 0
    while True:
        contrib = term / (2 * n + 1)
        total += contrib
        if abs(contrib) < mpmath.mpf(10) ** -45:
            break
        n += 1
        term *= -x * x / n
    return 2 / mpmath.sqrt(mpmath.pi) * total


def phi_oracle(x):
    return float((1 + erf_series(mpmath.mpf(x) / mpmath.sqrt(2))) / 2)


def gamma_p_oracle(a, x):
    return float(mpmath.gammainc(a, 0, x, regularized=True))


def quantile_oracle(shape, p):
    """Plain bisection on the 50-digit regularized gamma function."""
    lo, hi = mpmath.mpf(0), mpmath.mpf(1)
    while mpmath.gammainc(shape, 0, hi, regularized=True) < p:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if mpmath.gammainc(shape, 0, mid, regularized=True) < p:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


class TestNormalCdf:
    def test_center(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_196(self):
        assert std_normal_cdf(1.96) == pytest.approx(0.9750, abs=1e-4)

    @pytest.mark.parametrize("x", [-7.5, -3.0, -1.0, -0.3, 0.2, 1.96, 2.5, 4.0, 6.0])
    def test_against_series(self, x):
        assert abs(std_normal_cdf(x) - phi_oracle(x)) <= 1e-12

    def test_grid_properties(self):
        x = np.linspace(-10, 10, 1000)
        v = std_normal_cdf(x)
        assert np.all(np.diff(v) >= 0)
        assert np.all((v >= 0) & (v <= 1))
        np.testing.assert_allclose(v + std_normal_cdf(-x), 1.0, atol=1e-15)


class TestRegLowerGamma:
    def test_exponential_case(self):
        t = np.array([0.01, 0.5, 1.0, 3.0, 20.0])
        np.testing.assert_allclose(reg_lower_gamma(1.0, t), -np.expm1(-t), rtol=1e-13)

    def test_zero(self):
        assert reg_lower_gamma(2.0, 0.0) == 0.0

    @pytest.mark.parametrize("z", [0.1, 0.8, 1.5, 2.7])
    def test_half_shape_is_normal(self, z):
        assert reg_lower_gamma(0.5, z * z / 2) == pytest.approx(2 * std_normal_cdf(z) - 1, rel=1e-12)

    @pytest.mark.parametrize("a", [0.5, 1.0, 2.2, 6.0, 30.0])
    @pytest.mark.parametrize("x", [0.05, 1.0, 4.0, 12.0, 40.0])
    def test_relative_error(self, a, x):
        expected = gamma_p_oracle(a, x)
        assert reg_lower_gamma(a, x) == pytest.approx(expected, rel=1e-10)

    def test_limit_and_monotone(self):
        x = np.linspace(0, 80, 400)
        v = reg_lower_gamma(3.0, x)
        assert np.all(np.diff(v) >= 0)
        assert v[-1] == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("a,x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.1)])
    def test_domain(self, a, x):
        with pytest.raises(ValueError):
            reg_lower_gamma(a, x)


class TestChiSquare:
    def test_table_value(self):
        assert chi_square_sf(10.3267, 1) == pytest.approx(0.0013, abs=1e-4)

    @pytest.mark.parametrize("df", [1, 2, 5])
    def test_zero(self, df):
        assert chi_square_sf(0.0, df) == 1.0

    def test_two_df_closed_form(self):
        x = np.array([0.3, 1.0, 7.0, 40.0])
        np.testing.assert_allclose(chi_square_sf(x, 2), np.exp(-x / 2), rtol=1e-13)

    def test_complement(self):
        x = np.linspace(0.1, 30, 50)
        np.testing.assert_allclose(chi_square_sf(x, 3), 1 - reg_lower_gamma(1.5, x / 2), atol=1e-14)
        assert np.all(np.diff(chi_square_sf(x, 3)) < 0)

    def test_negative(self):
        with pytest.raises(ValueError):
            chi_square_sf(-1.0, 1)


class TestGammaQuantile:
    def test_exponential_median(self):
        assert gamma_quantile(1.0, 1.0, 0.5) == pytest.approx(math.log(2), rel=1e-13)

    def test_shape_two_median(self):
        expected = quantile_oracle(2.0, 0.5)
        assert expected == pytest.approx(1.6783, abs=1e-4)
        assert gamma_quantile(2.0, 1.0, 0.5) == pytest.approx(expected, rel=1e-11)

    @pytest.mark.parametrize("scale", [0.5, 2.0, 7.0])
    def test_scale_family(self, scale):
        assert gamma_quantile(3.0, scale, 0.3) == pytest.approx(scale * gamma_quantile(3.0, 1.0, 0.3), rel=1e-13)

    def test_lattice_inverse(self):
        ps = np.round(np.arange(0.05, 0.951, 0.05), 2)
        for shape in (0.5, 1, 2, 3, 6):
            qs = [gamma_quantile(shape, 1.0, p) for p in ps]
            assert np.all(np.diff(qs) > 0)
            for p, q in zip(ps, qs):
                assert abs(reg_lower_gamma(shape, q) - p) <= 1e-10
                # and the other direction
                assert gamma_quantile(shape, 1.0, float(reg_lower_gamma(shape, q))) == pytest.approx(q, abs=1e-8)

    @pytest.mark.parametrize("args", [(0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.0), (1, 1, 1.0), (-2, 1, 0.5)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            gamma_quantile(*args)


class TestSampling:
    def test_exponential_is_inverse_transform(self):
        u = RngStream(5, 1).uniform(10)
        x = sample_exponential(2.5, RngStream(5, 1), size=10)
        np.testing.assert_allclose(x, -np.log(1 - u) / 2.5, rtol=1e-15)

    def test_gamma_mean(self):
        x = sample_gamma(2.0, 1.0, RngStream(11), size=100_000)
        se = math.sqrt(2.0 / x.size)
        assert abs(x.mean() - 2.0) < 3 * se

    @pytest.mark.parametrize("shape", [0.5, 2.0, 6.0])
    def test_gamma_ks(self, shape):
        x = sample_gamma(shape, 1.5, RngStream(3, 7), size=100_000)
        res = stats.kstest(x, lambda t: reg_lower_gamma(shape, np.maximum(t, 0) / 1.5))
        assert res.pvalue > 0.001

    def test_determinism(self):
        a = sample_gamma(2.0, 1.0, RngStream(42, 9), size=50)
        b = sample_gamma(2.0, 1.0, RngStream(42, 9), size=50)
        c = sample_gamma(2.0, 1.0, RngStream(42, 10), size=50)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_streams_uncorrelated(self):
        a = RngStream(1, 0).normal(20_000)
        b = RngStream(1, 1).normal(20_000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(20_000)

    @pytest.mark.parametrize("call", [
        lambda r: sample_gamma(0.0, 1.0, r),
        lambda r: sample_gamma(1.0, -1.0, r),
        lambda r: sample_exponential(0.0, r),
    ])
    def test_domain(self, call):
        with pytest.raises(ValueError):
            call(RngStream(0))

    def test_negative_seed(self):
        with pytest.raises(ValueError):
            RngStream(-1)
