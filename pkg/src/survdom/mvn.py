"""Supremum probabilities of discretized Gaussian processes.

``P(max_i G_i > delta) = 1 - P(G_1 <= delta, ..., G_m <= delta)`` for a
centred Gaussian vector ``G``. The rectangle probability is computed with
Genz's separation-of-variables transform: after a prioritized Cholesky
decomposition the probability is an integral over the unit cube of a
product of conditional normal interval probabilities, which is evaluated
by randomly shifted rank-1 lattice rules built component by component. Independent shifts give an
unbiased error estimate.

:func:`mc_sup_prob` simulates paths directly and serves as an independent
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import functools

import numpy as np
from scipy import stats
from scipy.special import ndtr, ndtri

from .numerics import as_generator

__all__ = [
    "FactorizationError",
    "MvnResult",
    "factor_psd",
    "mvn_upper_tail_sup",
    "mvn_rectangle_prob",
    "mc_sup_prob",
]

_DEGENERATE_VAR = 1e-14
_MAX_DIM = 1000


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky factorization failed even after the maximal jitter."""


@dataclass(frozen=True)
class MvnResult:
    probability: float
    error: float
    evaluations: int
    converged: bool = True

    def as_dict(self):
        return {
            "probability": self.probability,
            "error": self.error,
            "evaluations": self.evaluations,
            "converged": self.converged,
        }


def factor_psd(
    matrix,
    *,
    start_jitter=1e-10,
    max_jitter=None,
    return_jitter=False,
):
    """Lower Cholesky factor of a symmetric PSD matrix, adding jitter if needed.

    Jitter starts at ``start_jitter`` and grows tenfold until
    ``np.linalg.cholesky`` succeeds. ``max_jitter`` defaults to ``1e-6``
    times the largest diagonal entry.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    scale = float(np.max(np.abs(np.diag(a)))) if a.size else 0.0
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)):
        raise ValueError("matrix must be symmetric")
    if max_jitter is None:
        max_jitter = 1e-6 * scale
    jitter = 0.0
    eye = np.eye(a.shape[0])
    while True:
        try:
            factor = np.linalg.cholesky(a + jitter * eye)
        except np.linalg.LinAlgError:
            jitter = start_jitter if jitter == 0.0 else jitter * 10.0
            if jitter > max_jitter:
                raise FactorizationError(
                    f"cholesky failed with jitter up to {max_jitter:.3g}"
                ) from None
            continue
        if np.all(np.isfinite(factor)):
            break
        jitter = start_jitter if jitter == 0.0 else jitter * 10.0
        if jitter > max_jitter:
            raise FactorizationError("non-finite cholesky factor")
    return (factor, jitter) if return_jitter else factor


def _prioritized_cholesky(cov, upper):
    """Cholesky factor with Genz-Bretz variable prioritization.

    At each step the remaining variable with the smallest conditional
    probability ``P(Z_j <= b_j | previous at their truncated means)`` is
    moved to the front. Returns the permuted upper limits, the factor with
    its diagonal split off, and a mask of degenerate (point constraint)
    rows.
    """
    c = np.array(cov, dtype=float, copy=True)
    b = np.array(upper, dtype=float, copy=True)
    m = c.shape[0]
    L = np.zeros((m, m))
    y = np.zeros(m)
    degenerate = np.zeros(m, dtype=bool)
    for i in range(m):
        # conditional variances and expected limits of the remaining rows
        cond_var = np.diag(c)[i:] - np.einsum("jk,jk->j", L[i:, :i], L[i:, :i])
        shift = L[i:, :i] @ y[:i]
        safe_sd = np.sqrt(np.maximum(cond_var, _DEGENERATE_VAR))
        with np.errstate(invalid="ignore"):
            prob = ndtr((b[i:] - shift) / safe_sd)
        # degenerate rows are resolved first since they cost nothing
        prob = np.where(cond_var < _DEGENERATE_VAR, -1.0, prob)
        j = i + int(np.argmin(prob))
        if j != i:
            c[[i, j], :] = c[[j, i], :]
            c[:, [i, j]] = c[:, [j, i]]
            L[[i, j], :] = L[[j, i], :]
            b[[i, j]] = b[[j, i]]
        var_i = c[i, i] - L[i, :i] @ L[i, :i]
        if var_i < _DEGENERATE_VAR:
            degenerate[i] = True
            y[i] = 0.0
            continue
        sd = np.sqrt(var_i)
        L[i, i] = sd
        if i + 1 < m:
            L[i + 1 :, i] = (c[i + 1 :, i] - L[i + 1 :, :i] @ L[i, :i]) / sd
        lim = (b[i] - L[i, :i] @ y[:i]) / sd
        p = ndtr(lim)
        # mean of a standard normal truncated to (-inf, lim]
        y[i] = -stats.norm.pdf(lim) / p if p > 1e-300 else lim
    return b, L, degenerate


def _is_prime(n):
    if n < 2:
        return False
    return all(n % p for p in range(2, int(n**0.5) + 1))


def _prev_prime(n):
    while not _is_prime(n):
        n -= 1
    return n


def _primitive_root(p):
    factors = [q for q in range(2, p) if (p - 1) % q == 0 and _is_prime(q)]
    g = 2
    while any(pow(g, (p - 1) // q, p) == 1 for q in factors):
        g += 1
    return g


@functools.lru_cache(maxsize=64)
def _cbc_lattice(dim, n_points):
    """Rank-1 lattice generator by fast component-by-component search.

    Minimizes the weighted worst-case error for a Korobov space with
    product weights ``0.8 ** j``, so leading coordinates get the best
    projections. ``n_points`` is rounded down to a prime.
    """
    n = _prev_prime(n_points)
    half = (n - 1) // 2
    g = _primitive_root(n)
    perm = np.empty(half, dtype=np.int64)
    perm[0] = 1
    for j in range(1, half):
        perm[j] = (g * perm[j - 1]) % n
    perm = np.minimum(n - perm, perm)
    frac = perm / n
    kernel = frac * frac - frac + 1.0 / 6.0
    kernel_fft = np.fft.fft(kernel)
    weights = 0.8 ** np.arange(dim)
    prod = np.ones(half)
    z = np.ones(dim, dtype=np.int64)
    w = 0
    for s in range(1, dim):
        reordered = np.concatenate((kernel[: w + 1][::-1], kernel[w + 1 :][::-1]))
        prod = prod * (1.0 + weights[s - 1] * reordered)
        w = int(np.fft.ifft(kernel_fft * np.fft.fft(prod)).real.argmin())
        z[s] = perm[w]
    return z / n, n


def _integrand(w, b, L, degenerate):
    """Separation-of-variables integrand at points ``w`` of shape (n, m)."""
    return _lattice_integrand(np.asarray(w, dtype=float).T, b, L, degenerate)


def _lattice_integrand(columns, b, L, degenerate):
    """Integrand values; ``columns(i)`` yields coordinate ``i`` of every point.

    ``columns`` is either a callable or an (m, n) array. Conditioned values
    are stored row-major so each step is one contiguous matrix-vector
    product.
    """
    get = columns if callable(columns) else columns.__getitem__
    m = b.shape[0]
    f = None
    ys = None
    for i in range(m):
        if i:
            t = L[i, :i] @ ys[:i]
        else:
            t = 0.0
        if degenerate[i]:
            ind = (b[i] - t) >= 0
            f = ind.astype(float) if f is None else f * ind
            if ys is None:
                ys = np.zeros((m, np.shape(ind)[0] if np.ndim(ind) else get(0).shape[0]))
            continue
        e = ndtr((b[i] - t) / L[i, i])
        if f is None:
            w0 = get(0)
            n = w0.shape[0]
            e = np.broadcast_to(e, (n,)).copy()
            f = e.copy()
            ys = np.zeros((m, n))
        else:
            f *= e
        if i + 1 < m:
            u = get(i) * e
            np.clip(u, 1e-300, 1.0 - 1e-16, out=u)
            ys[i] = ndtri(u)
    return f


def mvn_rectangle_prob(
    cov,
    upper,
    *,
    accuracy=5e-4,
    rng=None,
    max_evaluations=10_000_000,
    n_shifts=12,
    initial_points=499,
    confidence=0.95,
) -> MvnResult:
    """``P(G <= upper)`` componentwise for ``G ~ N(0, cov)``.

    The returned ``error`` is a two-sided ``confidence`` bound on the
    absolute error, computed from the spread of ``n_shifts`` independently
    shifted lattice estimates. Rounds double the points per shift until the
    error is below ``accuracy`` or ``max_evaluations`` is reached; round
    estimates are pooled by inverse-variance weighting.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    m = cov.shape[0]
    if m == 0 or m > _MAX_DIM:
        raise ValueError(f"dimension must be in 1..{_MAX_DIM}")
    if not accuracy > 0:
        raise ValueError("accuracy must be positive")
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (m,))
    if np.any(np.isnan(upper)):
        raise ValueError("upper limits must not be NaN")
    if np.any(np.diag(cov) < -1e-12):
        raise ValueError("covariance has a negative diagonal entry")
    if np.any(upper == -np.inf):
        return MvnResult(0.0, 0.0, 0)
    # surface factorization failures the same way for every caller
    factor_psd(cov, max_jitter=1e-6 * max(float(np.max(np.diag(cov))), 1e-300))

    gen = as_generator(rng)
    b, L, degenerate = _prioritized_cholesky(cov, upper)
    if m == 1 or degenerate.all():
        value = float(_integrand(np.full((1, m), 0.5), b, L, degenerate)[0])
        return MvnResult(value, 0.0, 1)

    t_crit = float(stats.t.ppf(0.5 + confidence / 2.0, n_shifts - 1))
    n_points = initial_points
    evaluations = 0
    weight_sum = 0.0
    weighted = 0.0
    estimate = 0.0
    error = np.inf
    while True:
        gen_vec, n_points = _cbc_lattice(m, n_points)
        k = np.tile(np.arange(n_points, dtype=float), n_shifts)
        shifts = np.repeat(gen.random((m, n_shifts)), n_points, axis=1)

        def column(i, k=k, shifts=shifts):
            x = k * gen_vec[i] + shifts[i]
            x -= np.floor(x)
            return np.abs(2.0 * x - 1.0)

        values = _lattice_integrand(column, b, L, degenerate)
        shift_means = values.reshape(n_shifts, n_points).mean(axis=1)
        evaluations += n_points * n_shifts
        mean = float(shift_means.mean())
        var = float(shift_means.var(ddof=1) / n_shifts)
        if var <= 0.0:
            estimate, error = mean, 0.0
            break
        weight_sum += 1.0 / var
        weighted += mean / var
        estimate = weighted / weight_sum
        error = t_crit * np.sqrt(1.0 / weight_sum)
        if error <= accuracy:
            break
        if evaluations + 2 * n_points * n_shifts > max_evaluations:
            break
        n_points *= 2
    estimate = min(max(estimate, 0.0), 1.0)
    return MvnResult(estimate, float(error), evaluations, bool(error <= accuracy))


def mvn_upper_tail_sup(
    cov,
    delta,
    accuracy=5e-4,
    rng=None,
    *,
    max_evaluations=10_000_000,
    include_origin=False,
    **kwargs,
) -> MvnResult:
    """``P(max_i G_i > delta)`` for ``G ~ N(0, cov)``.

    With ``include_origin`` the process is also observed at time zero where
    it equals 0 almost surely, so any negative ``delta`` is exceeded with
    probability one.
    """
    delta = float(delta)
    if np.isnan(delta):
        raise ValueError("delta must not be NaN")
    if include_origin and delta < 0:
        return MvnResult(1.0, 0.0, 0)
    cov = np.asarray(cov, dtype=float)
    res = mvn_rectangle_prob(
        cov,
        np.full(cov.shape[0], delta),
        accuracy=accuracy,
        rng=rng,
        max_evaluations=max_evaluations,
        **kwargs,
    )
    return MvnResult(
        min(max(1.0 - res.probability, 0.0), 1.0),
        res.error,
        res.evaluations,
        res.converged,
    )


def mc_sup_prob(cov, delta, n_paths=100_000, rng=None, *, chunk=20_000):
    """Crude Monte Carlo estimate of ``P(max_i G_i > delta)``.

    Returns
    -------
    probability : float
    std_error : float
        Binomial standard error ``sqrt(p (1 - p) / N)``.
    """
    if n_paths < 100:
        raise ValueError("need at least 100 paths")
    factor = factor_psd(cov)
    gen = as_generator(rng)
    m = factor.shape[0]
    hits = 0
    done = 0
    while done < n_paths:
        k = min(chunk, n_paths - done)
        paths = gen.standard_normal((k, m)) @ factor.T
        hits += int(np.count_nonzero(paths.max(axis=1) > delta))
        done += k
    p = hits / n_paths
    return p, float(np.sqrt(p * (1.0 - p) / n_paths))
