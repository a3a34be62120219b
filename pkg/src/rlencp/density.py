"""Time-delay embedding and leave-one-out Jackknife kernel density estimates.

Indices are 0-based throughout: ``vectors[i] = series[i:i+m]`` and
``targets[i] = series[i+m]`` for ``i = 0..n-1`` with ``n = N - m``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ArgumentError, DomainError
from .kernels import (EPANECHNIKOV, _jk_nb, boundary_table, get_kernel,
                      jackknife_matrix)


def as_unit_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ArgumentError(f"expected a 1-D series, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("series contains non-finite values")
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise DomainError("series values must lie in [0, 1]; apply logistic_transform first")
    return x


@dataclass(frozen=True)
class Embedding:
    m: int
    n: int
    vectors: np.ndarray
    targets: np.ndarray


def embed(series, m: int) -> Embedding:
    x = as_unit_series(series)
    N = x.size
    if not 1 <= m <= N - 2:
        raise ArgumentError(f"lag order m={m} outside [1, N-2] for N={N}")
    n = N - m
    vectors = np.lib.stride_tricks.sliding_window_view(x, m)[:n].copy()
    return Embedding(m, n, vectors, x[m:].copy())


def _as_points(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2:
        raise ArgumentError(f"points must be (n, d), got shape {P.shape}")
    if P.shape[0] < 2:
        raise ArgumentError("leave-one-out density needs at least 2 points")
    return P


def loo_density_matrix(points, h: float, kernel=EPANECHNIKOV) -> np.ndarray:
    """Pairwise product-kernel matrix with a zeroed diagonal (dense path)."""
    P = _as_points(points)
    n, d = P.shape
    out = np.ones((n, n))
    for k in range(d):
        out *= jackknife_matrix(P[:, k], P[:, k], h, kernel)
    np.fill_diagonal(out, 0.0)
    return out


def loo_densities(points, h: float, kernel=EPANECHNIKOV) -> np.ndarray:
    """All n leave-one-out densities from the dense kernel matrix."""
    M = loo_density_matrix(points, h, kernel)
    return M.sum(axis=1) / (M.shape[0] - 1)


def loo_density(points, i: int, h: float, kernel=EPANECHNIKOV) -> float:
    """Leave-one-out density at ``points[i]``; may be <= 0 near the edges."""
    P = _as_points(points)
    n = P.shape[0]
    if not 0 <= i < n:
        raise ArgumentError(f"index {i} outside [0, {n})")
    row = np.ones(n)
    for k in range(P.shape[1]):
        row *= jackknife_matrix(P[i:i + 1, k], P[:, k], h, kernel)[0]
    row[i] = 0.0
    return float(row.sum() / (n - 1))


@numba.njit(cache=True, nogil=True)
def _loo_points_nb(P, kind, rho, alpha, a1, a2, inv_h, kid):
    n, d = P.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if j == i:
                continue
            p = 1.0
            for k in range(d):
                p *= _jk_nb(P[i, k], kind[i, k], rho[i, k], alpha[i, k],
                            a1[i, k], a2[i, k], P[j, k], inv_h, kid)
                if p == 0.0:
                    break
            acc += p
        out[i] = acc / (n - 1)
    return out


def _tables_2d(P, h, kernel):
    tabs = [boundary_table(P[:, k], h, kernel) for k in range(P.shape[1])]
    stack = lambda name: np.ascontiguousarray(np.stack([getattr(t, name) for t in tabs], axis=1))
    return stack("kind"), stack("rho"), stack("alpha"), stack("a1"), stack("a2")


def loo_densities_streaming(points, h: float, kernel=EPANECHNIKOV) -> np.ndarray:
    """Same quantity as :func:`loo_densities`, one row at a time in O(n) memory."""
    kernel = get_kernel(kernel)
    P = np.ascontiguousarray(_as_points(points))
    kind, rho, alpha, a1, a2 = _tables_2d(P, h, kernel)
    return _loo_points_nb(P, kind, rho, alpha, a1, a2, 1.0 / h, kernel.kid)


@numba.njit(cache=True, nogil=True)
def _series_densities_nb(x, m, kind, rho, alpha, a1, a2, inv_h, kid):
    n = x.size - m
    f = np.empty(n)
    g = np.empty(n)
    g1 = np.empty(n)
    for i in range(n):
        t = i + m
        fi = 0.0
        gi = 0.0
        g1i = 0.0
        for j in range(n):
            if j == i:
                continue
            kt = _jk_nb(x[t], kind[t], rho[t], alpha[t], a1[t], a2[t], x[j + m], inv_h, kid)
            p = 1.0
            for k in range(m):
                a = i + k
                p *= _jk_nb(x[a], kind[a], rho[a], alpha[a], a1[a], a2[a], x[j + k], inv_h, kid)
                if p == 0.0:
                    break
            gi += p
            g1i += kt
            fi += p * kt
        f[i] = fi / (n - 1)
        g[i] = gi / (n - 1)
        g1[i] = g1i / (n - 1)
    return f, g, g1


def series_loo_densities(series, m: int, h: float, kernel=EPANECHNIKOV):
    """Leave-one-out ``(f_hat, g_hat, g1_hat)`` over the lag-m embedding of a series.

    ``f_hat`` is evaluated at the (m+1)-blocks, ``g_hat`` at the m-blocks and
    ``g1_hat`` at the targets, all with the same bandwidth.
    """
    kernel = get_kernel(kernel)
    x = np.ascontiguousarray(as_unit_series(series))
    if not 1 <= m <= x.size - 2:
        raise ArgumentError(f"lag order m={m} outside [1, N-2] for N={x.size}")
    tab = boundary_table(x, h, kernel)
    return _series_densities_nb(x, m, tab.kind, tab.rho, tab.alpha, tab.a1, tab.a2,
                                1.0 / h, kernel.kid)
