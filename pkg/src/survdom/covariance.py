"""Discretized covariance of the limiting Kaplan-Meier difference process.

For one sample the limiting process of ``sqrt(n) * (KM - S)`` has covariance

    S(s) * S(t) * a(min(s, t)),   a(x) = int_0^x -dS(u) / (S(u)^2 H(u)),

where ``H`` is the censoring survival function. Every unknown is replaced
by a plug-in: the KM curve for ``S``, a KM-weighted kernel density for
``-dS`` and, by default, the empirical survival of the observed times for
the product ``S * H``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_scalar_positive
from .density import DensityEstimate, default_bandwidth, km_kernel_cdf, km_kernel_density
from .estimators import (
    _coerce_sample,
    censoring_km,
    empirical_observed_survival,
    km_fit,
)

__all__ = [
    "Grid",
    "CovarianceDiagnostics",
    "CovarianceModel",
    "AssumptionError",
    "compute_tau",
    "build_grid",
    "refine_grid",
    "a_integral",
    "single_sample_cov",
    "pooled_cov",
    "DENOMINATORS",
]

DENOMINATORS = ("empirical", "reverse-km")


class AssumptionError(ValueError):
    """A plug-in survival vanishes inside the analysis window."""


@dataclass(frozen=True)
class Grid:
    tau: float
    points: np.ndarray

    @property
    def m(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.m

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.tau == other.tau and np.array_equal(self.points, other.points)

    __hash__ = None


@dataclass(frozen=True)
class CovarianceDiagnostics:
    min_eigenvalue: float
    jitter: float
    dropped: tuple = ()

    def as_dict(self):
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "jitter": self.jitter,
            "dropped_points": list(self.dropped),
        }


@dataclass(frozen=True)
class CovarianceModel:
    """Pooled covariance over the retained grid points.

    ``matrix`` is indexed by ``kept``, the positions in ``grid.points`` that
    survived the degenerate-variance filter. ``factor`` is a lower
    triangular matrix with ``factor @ factor.T == matrix + jitter * I``.
    """

    grid: Grid
    matrix: np.ndarray
    lam: float
    kept: np.ndarray
    factor: np.ndarray = field(repr=False)
    diagnostics: CovarianceDiagnostics

    @property
    def points(self):
        return self.grid.points[self.kept]


def compute_tau(sample_t, sample_u) -> float:
    """Upper end of the analysis window: the smaller of the two sample maxima."""
    sample_t = _coerce_sample(sample_t)
    sample_u = _coerce_sample(sample_u)
    return float(min(sample_t.time[-1], sample_u.time[-1]))


def build_grid(tau, m) -> Grid:
    """Equispaced points ``i * tau / m`` for ``i = 1..m``."""
    tau = check_scalar_positive(tau, "tau")
    if int(m) != m or m < 2:
        raise ValueError(f"grid size must be an integer >= 2, got {m!r}")
    m = int(m)
    return Grid(tau=tau, points=np.arange(1, m + 1) * (tau / m))


def refine_grid(grid: Grid, factor: int = 10) -> np.ndarray:
    """Sub-grid on ``[0, tau]`` splitting every grid cell into ``factor`` pieces.

    The grid point ``grid.points[i]`` sits at index ``(i + 1) * factor``.
    """
    if factor < 1:
        raise ValueError("refinement factor must be >= 1")
    knots = np.concatenate(([0.0], grid.points))
    frac = np.arange(factor) / factor
    sub = (knots[:-1, None] + np.diff(knots)[:, None] * frac[None, :]).ravel()
    return np.concatenate((sub, knots[-1:]))


def _denominator(sample, points, denominator):
    km = km_fit(sample)
    s = km.left_limit(points)
    if denominator == "empirical":
        sx = empirical_observed_survival(sample).left_limit(points)
    elif denominator == "reverse-km":
        sx = s * censoring_km(sample).left_limit(points)
    else:
        raise ValueError(f"denominator must be one of {DENOMINATORS}, got {denominator!r}")
    return s, sx


def a_integral(
    sample,
    grid: Grid,
    density: DensityEstimate | None = None,
    *,
    refine: int = 10,
    floor: float = 1e-3,
    denominator: str = "empirical",
    lower_tail: bool = True,
):
    """Plug-in estimate of ``a`` at each grid point.

    The integrand ``f(u) / (S(u-) * S_X(u-))`` is integrated by the
    cumulative trapezoid rule over ``refine_grid(grid, refine)``; both
    denominators are clamped below at ``floor``. Left limits keep the
    at-risk fraction of the largest observation positive at ``tau``.

    Parameters
    ----------
    density : DensityEstimate, optional
        Density on the refined grid. Computed with the default bandwidth
        when omitted.
    lower_tail : bool, default=True
        Start the integral at the kernel mass that falls below zero. The
        Gaussian kernel leaks roughly ``h**2 / 4`` of mass there for
        densities vanishing linearly at the origin, which otherwise biases
        ``a`` low at early times.
    """
    sample = _coerce_sample(sample)
    sub = refine_grid(grid, refine)
    if density is None:
        density = km_kernel_density(sample, default_bandwidth(sample), sub)
    elif density.grid.shape != sub.shape or not np.allclose(density.grid, sub):
        raise ValueError("density must be evaluated on the refined grid")

    s, sx = _denominator(sample, sub, denominator)
    # only the final grid cell may touch zero
    head = sub < (grid.points[-2] if grid.m > 1 else grid.points[-1])
    if np.any(s[head] <= 0) or np.any(sx[head] <= 0):
        raise AssumptionError(
            f"plug-in survival of sample {sample.label!r} reaches zero before tau"
        )
    integrand = density.values / (np.maximum(s, floor) * np.maximum(sx, floor))
    # kernel mass below the origin, where both denominators equal one
    head_mass = float(km_kernel_cdf(sample, density.bandwidth, [0.0])[0]) if lower_tail else 0.0
    cum = head_mass + np.concatenate(
        ([0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(sub)))
    )
    return cum[refine::refine]


def single_sample_cov(sample, grid: Grid, density=None, *, a_values=None, **kwargs):
    """Covariance matrix ``S(t_i) S(t_j) a(min(t_i, t_j))`` on the grid."""
    sample = _coerce_sample(sample)
    if a_values is None:
        a_values = a_integral(sample, grid, density, **kwargs)
    s = km_fit(sample)(grid.points)
    a_min = np.minimum.outer(a_values, a_values)
    return np.outer(s, s) * a_min


def pooled_cov(
    cov_t,
    cov_u,
    lam,
    grid: Grid | None = None,
    *,
    variance_floor: float = 1e-12,
    start_jitter: float = 1e-10,
    max_relative_jitter: float = 1e-6,
) -> CovarianceModel:
    """Convex combination ``(1 - lam) * cov_t + lam * cov_u`` with PSD repair.

    Grid points whose variance is below ``variance_floor`` in both samples
    are removed. The remaining matrix is symmetrized and, if a Cholesky
    factorization fails, a diagonal jitter starting at ``start_jitter`` is
    escalated tenfold until it succeeds.
    """
    cov_t = np.asarray(cov_t, dtype=float)
    cov_u = np.asarray(cov_u, dtype=float)
    if cov_t.shape != cov_u.shape or cov_t.ndim != 2 or cov_t.shape[0] != cov_t.shape[1]:
        raise ValueError("covariance matrices must be square and share a grid")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")
    m = cov_t.shape[0]
    if grid is None:
        grid = Grid(tau=float(m), points=np.arange(1.0, m + 1))
    elif grid.m != m:
        raise ValueError("grid does not match covariance dimension")

    degenerate = (np.diag(cov_t) < variance_floor) & (np.diag(cov_u) < variance_floor)
    kept = np.flatnonzero(~degenerate)
    if kept.size == 0:
        raise ValueError("every grid point has vanishing variance")
    pooled = (1.0 - lam) * cov_t + lam * cov_u
    pooled = pooled[np.ix_(kept, kept)]
    pooled = 0.5 * (pooled + pooled.T)

    from .mvn import FactorizationError, factor_psd

    try:
        factor, jitter = factor_psd(
            pooled,
            start_jitter=start_jitter,
            max_jitter=max_relative_jitter * float(np.max(np.diag(pooled))),
            return_jitter=True,
        )
    except FactorizationError as exc:
        raise FactorizationError(f"pooled covariance is not repairable: {exc}") from exc
    min_eig = float(np.linalg.eigvalsh(pooled)[0])
    return CovarianceModel(
        grid=grid,
        matrix=pooled,
        lam=float(lam),
        kept=kept,
        factor=factor,
        diagnostics=CovarianceDiagnostics(
            min_eigenvalue=min_eig,
            jitter=jitter,
            dropped=tuple(int(i) for i in np.flatnonzero(degenerate)),
        ),
    )
