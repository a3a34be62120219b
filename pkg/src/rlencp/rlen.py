"""Nonparametric relative entropy of serial dependence and its closed-form oracles.

For a series ``x`` in [0, 1] and lag order ``m`` the estimator is

    E(m, h) = n^-1 * sum_{i in S} log( f(x_{i;m+1}) / (g(x_{i;m}) * g1(x_{i+m})) )

with leave-one-out Jackknife kernel densities and ``S`` the set of indices
where all three estimates are strictly positive. The sum is divided by
``n = N - m``, not by ``|S|``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .density import as_unit_series, series_loo_densities
from .errors import (ArgumentError, ConditioningError, DomainError,
                     EstimationDegenerateError)
from .kernels import EPANECHNIKOV, get_kernel

log = logging.getLogger(__name__)

H_MAX = 0.49
ENTROPY_GRID_SIZE = 20


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    m: int
    h: float
    s_count: int
    n: int


def rlen_estimate(series, m: int, h: float, kernel=EPANECHNIKOV) -> EntropyEstimate:
    f, g, g1 = series_loo_densities(series, m, h, kernel)
    n = f.size
    keep = (f > 0.0) & (g > 0.0) & (g1 > 0.0)
    s_count = int(keep.sum())
    if s_count == 0:
        raise EstimationDegenerateError("no index with all three densities positive", n=n, h=h)
    terms = np.log(f[keep]) - np.log(g[keep]) - np.log(g1[keep])
    return EntropyEstimate(float(math.fsum(terms) / n), m, float(h), s_count, n)


def default_grid(n: int, m: int, size: int, lo_mult=0.5, hi_mult=4.0, scale=1.0) -> np.ndarray:
    """Log-spaced bandwidths around scale * n^(-1/(4+m)), capped below 0.5."""
    base = scale * n ** (-1.0 / (4.0 + m))
    lo = min(lo_mult * base, H_MAX)
    hi = min(hi_mult * base, H_MAX)
    if hi <= lo:
        return np.array([lo])
    return np.geomspace(lo, hi, size)


def series_scale(series) -> float:
    """Sample standard deviation, or 1 for a constant series."""
    x = np.asarray(series, dtype=float)
    s = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return s if s > 0.0 else 1.0


def entropy_grid(series, m: int, size: int = ENTROPY_GRID_SIZE, lo_mult=0.5,
                 hi_mult=4.0) -> np.ndarray:
    """Default entropy grid of one series: multipliers of sd * n^(-1/(4+m)).

    Scaling by the sample standard deviation follows the usual normal-reference
    rule, so the grid tracks the spread of the data inside [0, 1].
    """
    x = np.asarray(series, dtype=float)
    return default_grid(x.size - m, m, size, lo_mult, hi_mult, series_scale(x))


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ArgumentError("bandwidth grid is empty")
    if np.any(grid <= 0.0) or np.any(grid >= 0.5):
        raise ArgumentError("bandwidths must lie in (0, 0.5)")
    return grid


def select_bandwidth(series, m: int, grid=None, kernel=EPANECHNIKOV):
    """Grid maximizer of the estimator; ties go to the smallest bandwidth.

    ``grid`` may be a bandwidth set, a callable ``grid(series, m)``, or
    ``None`` for :func:`entropy_grid`.
    """
    x = as_unit_series(series)
    if grid is None:
        grid = entropy_grid(x, m)
    elif callable(grid):
        grid = grid(x, m)
    grid = _check_grid(grid)
    best = None
    for h in np.sort(grid):
        try:
            est = rlen_estimate(x, m, float(h), kernel)
        except EstimationDegenerateError:
            continue
        if best is None or est.value > best.value:
            best = est
    if best is None:
        raise EstimationDegenerateError("every bandwidth in the grid is degenerate",
                                        n=x.size - m, grid_size=grid.size)
    return best.h, best


@dataclass
class EntropyProfile:
    m: int
    values: np.ndarray
    bandwidths: np.ndarray
    estimates: list = field(repr=False)


def _map_columns(fn, J, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(J)))
    return [fn(j) for j in range(J)]


def entropy_profile(matrix, m: int, grid=None, kernel=EPANECHNIKOV, threads: int = 1) -> EntropyProfile:
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise ArgumentError(f"expected an N x J matrix, got shape {X.shape}")

    def one(j):
        try:
            return select_bandwidth(X[:, j], m, grid, kernel)[1]
        except EstimationDegenerateError as exc:
            raise EstimationDegenerateError(f"column {j}: {exc}", column=j) from exc

    ests = _map_columns(one, X.shape[1], threads)
    return EntropyProfile(m, np.array([e.value for e in ests]),
                          np.array([e.h for e in ests]), ests)


# Gaussian AR oracles -------------------------------------------------------

@dataclass(frozen=True)
class ARSpec:
    phi: tuple
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(float(p) for p in self.phi))
        if self.sigma2 <= 0:
            raise ArgumentError(f"innovation variance must be positive, got {self.sigma2}")
        check_stationary(self.phi)


def companion_radius(phi) -> float:
    phi = np.asarray(phi, dtype=float)
    if phi.size == 0:
        return 0.0
    C = np.zeros((phi.size, phi.size))
    C[0] = phi
    C[1:, :-1] = np.eye(phi.size - 1)
    return float(np.max(np.abs(np.linalg.eigvals(C))))


def check_stationary(phi):
    r = companion_radius(phi)
    if not r < 1.0:
        raise DomainError(f"AR coefficients {tuple(phi)} are not stationary (spectral radius {r:.6g})")


def ar2_rlen(phi1: float, phi2: float) -> float:
    if not (-1.0 < phi2 < 1.0 - abs(phi1)):
        raise DomainError(f"AR(2) pair ({phi1}, {phi2}) is not stationary")
    phi_c = (phi2 + 1.0) * (phi1**2 - phi2**2 + 2.0 * phi2 - 1.0)
    return 0.5 * math.log((phi2 - 1.0) / phi_c)


def yule_walker_autocorr(phi, K: int) -> np.ndarray:
    """Autocorrelations rho_1..rho_K of a stationary AR(p) process."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    p = phi.size
    check_stationary(phi)
    if K < 0:
        raise ArgumentError(f"max lag must be nonnegative, got {K}")
    rho = np.zeros(max(K, p) + 1)
    rho[0] = 1.0
    if p:
        # rho_k - sum_j phi_j rho_|k-j| = 0 for k = 1..p, unknowns rho_1..rho_p
        A = np.eye(p)
        b = np.zeros(p)
        for k in range(1, p + 1):
            for j in range(1, p + 1):
                lag = abs(k - j)
                if lag == 0:
                    b[k - 1] += phi[j - 1]
                else:
                    A[k - 1, lag - 1] -= phi[j - 1]
        try:
            rho[1:p + 1] = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as exc:
            raise DomainError(f"singular Yule-Walker system for {tuple(phi)}") from exc
        for k in range(p + 1, K + 1):
            rho[k] = np.dot(phi, rho[k - 1:k - p - 1:-1])
    return rho[1:K + 1]


def _logdet_spd(R) -> float:
    lu, d, perm = scipy.linalg.ldl(R, lower=True)
    diag = np.diag(d)
    if np.any(np.abs(np.diag(d, -1)) > 0) or np.any(diag <= 0.0):
        raise ConditioningError("correlation matrix is not positive definite", size=R.shape[0])
    return float(np.sum(np.log(diag)))


def arp_rlen(phi, m: int, s: int = 1) -> float:
    """Gaussian AR(p) relative entropy between the first m+1-s and last s of m+1 values."""
    if m < 1 or not 1 <= s <= m:
        raise ArgumentError(f"need m >= 1 and 1 <= s <= m, got m={m}, s={s}")
    rho = np.concatenate([[1.0], yule_walker_autocorr(phi, m)])
    R = scipy.linalg.toeplitz(rho)
    k = m + 1 - s
    return 0.5 * (_logdet_spd(R[:k, :k]) + _logdet_spd(R[k:, k:]) - _logdet_spd(R))


# Asymptotic constants ------------------------------------------------------

@dataclass(frozen=True)
class TheoryConstants:
    kappa: float
    tau: float
    tau1: float
    tau2: float
    d0: float
    d1: float
    sigma_star2: float
    c1: float
    c2: float
    beta: float
    beta1: float
    beta2: float


def theory_constants(kernel=EPANECHNIKOV, m: int = 1, h: float = 0.1, n: int = 100) -> TheoryConstants:
    """Centering (d0, d1) and variance (sigma*^2) of 2*E under independence.

    ``n`` is the effective sample size N - m. The standardized statistic is
    sqrt(n) * h**((m+1)/2) * (2*E + d0 + d1) / sigma*.
    """
    kernel = get_kernel(kernel)
    if m < 1:
        raise ArgumentError(f"m must be >= 1, got {m}")
    if n <= m + 2:
        raise ArgumentError(f"need n > m + 2, got n={n}, m={m}")
    if h <= 0:
        raise ArgumentError(f"bandwidth must be positive, got {h}")
    kappa, tau, tau1, tau2 = kernel.kappa, kernel.tau, kernel.tau1, kernel.tau2
    beta = 2.0 * n * (n - m) * (n - m + 1) / (n**2 * (n - 1) ** 2)
    beta1 = beta * (n - 2) ** 2 / (n - 1) ** 2
    beta2 = beta * (n - 2) / (n - 1)
    sigma_star2 = 2.0 * beta * kappa**m + beta1 * tau1**m + 2.0 * beta2 * tau2**m
    d0 = kappa ** (m + 1) * h ** (-(m + 1)) / (n - 1)
    c1 = (2 * n - m - 1) * m / ((n - m - 1) * (n - m))
    c2 = (2 * n - m) * (m - 1) / ((n - m) * (n - m + 1))
    d1 = (n - 2) / (n - 1) * (c1 * (tau ** (m + 1) - 1.0) - c2 * (tau**m - 1.0))
    return TheoryConstants(kappa, tau, tau1, tau2, d0, d1, sigma_star2, c1, c2, beta, beta1, beta2)


def standardized_statistic(estimate: EntropyEstimate, constants: TheoryConstants) -> float:
    n, m, h = estimate.n, estimate.m, estimate.h
    centred = 2.0 * estimate.value + constants.d0 + constants.d1
    return math.sqrt(n) * h ** ((m + 1) / 2.0) * centred / math.sqrt(constants.sigma_star2)
