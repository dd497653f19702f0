import numpy as np
import pytest
from scipy import stats
from sklearn.base import clone

from survdom.density import (
    KMKernelDensity,
    default_bandwidth,
    km_jump_masses,
    km_kernel_cdf,
    km_kernel_density,
)
from survdom.estimators import SurvivalSample


def test_bandwidth_two_points():
    s = SurvivalSample([1.0, 3.0], [1, 1])
    assert default_bandwidth(s) == pytest.approx(1.06 * 2 ** -0.2, rel=1e-12)
    assert default_bandwidth(s) == pytest.approx(0.9228, abs=1e-4)


def test_bandwidth_degenerate():
    with pytest.raises(ValueError):
        default_bandwidth(SurvivalSample([2.0, 2.0, 2.0], [1, 1, 1]))
    with pytest.raises(ValueError):
        default_bandwidth(SurvivalSample([1.0, 2.0], [0, 1]))


def test_single_event_bump():
    s = SurvivalSample([2.0], [1])
    grid = np.linspace(-2, 6, 81)
    est = km_kernel_density(s, 0.7, grid)
    np.testing.assert_allclose(est.values, stats.norm.pdf(grid, 2.0, 0.7), rtol=1e-12)


def test_uncensored_matches_plain_kde():
    x = np.random.default_rng(1).gamma(2.0, 1.0, 150)
    grid = np.linspace(0, 10, 200)
    est = km_kernel_density(SurvivalSample(x, np.ones(x.size)), 0.4, grid)
    plain = stats.norm.pdf(grid[:, None], x[None, :], 0.4).mean(axis=1)
    np.testing.assert_allclose(est.values, plain, rtol=1e-10, atol=1e-15)


def censored(seed, n=300):
    gen = np.random.default_rng(seed)
    life = gen.gamma(3.0, 2.0, n)
    cens = gen.exponential(12.0, n)
    return SurvivalSample(np.minimum(life, cens), life <= cens)


@pytest.mark.parametrize("seed", range(5))
def test_mass_bookkeeping(seed):
    s = censored(seed)
    h = default_bandwidth(s)
    grid = np.linspace(s.time.min() - 10 * h, s.time.max() + 10 * h, 20_001)
    est = km_kernel_density(s, h, grid)
    mass = km_jump_masses(s)[1].sum()
    assert est.integral() == pytest.approx(mass, rel=0.01)
    assert np.all(est.values >= 0)


@pytest.mark.parametrize("seed", range(5))
def test_larger_bandwidth_lowers_peak(seed):
    # a wider Gaussian kernel is the narrower one convolved with another Gaussian
    s = censored(seed, 80)
    h = default_bandwidth(s)
    grid = np.linspace(0, s.time.max() + 5 * h, 40_001)
    peak_h = km_kernel_density(s, h, grid).values.max()
    peak_2h = km_kernel_density(s, 2 * h, grid).values.max()
    assert peak_2h <= peak_h * (1 + 1e-6)


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_scale_equivariance(c):
    s = censored(7, 120)
    h = default_bandwidth(s)
    assert default_bandwidth(s.scaled(c)) == pytest.approx(c * h, rel=1e-12)
    grid = np.linspace(0.1, 20, 50)
    f = km_kernel_density(s, h, grid).values
    fc = km_kernel_density(s.scaled(c), c * h, c * grid).values
    np.testing.assert_allclose(fc, f / c, rtol=1e-10)


def test_cdf_is_integral_of_density():
    s = censored(3, 100)
    h = default_bandwidth(s)
    grid = np.linspace(-10, 40, 50_001)
    dens = km_kernel_density(s, h, grid).values
    cum = np.concatenate(([0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))))
    pts = np.array([2.0, 5.0, 9.0, 20.0])
    np.testing.assert_allclose(km_kernel_cdf(s, h, pts), np.interp(pts, grid, cum), atol=1e-6)


def test_estimator_api():
    x = censored(2, 60)
    est = KMKernelDensity().fit(x.time, x.event)
    assert est.bandwidth_ == pytest.approx(default_bandwidth(x))
    np.testing.assert_allclose(
        est.predict([1.0, 4.0]), km_kernel_density(x, est.bandwidth_, [1.0, 4.0]).values
    )
    np.testing.assert_allclose(np.exp(est.score_samples([3.0])), est.predict([3.0]))
    assert clone(KMKernelDensity(bandwidth=0.5)).get_params() == {"bandwidth": 0.5}
    with pytest.raises(ValueError):
        KMKernelDensity(bandwidth=-1.0).fit(x.time, x.event)
