"""BIC lag-order selection with leave-one-out Nadaraya-Watson regression.

For each candidate lag m the target ``x[i+m]`` is regressed on the block
``x[i:i+m]`` with the product Jackknife kernel. The kernel between a data
point ``x_j`` and a query ``x_i`` is ``K(x_j - x_i)``, so the boundary branch
is chosen by the data point.

The leave-one-out predictor follows the printed form by default: the self
term stays in the numerator while the normalizer skips it. ``symmetric=True``
drops the self term from both.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .density import Embedding, _tables_2d, as_unit_series, embed
from .errors import (ArgumentError, DegenerateFitError, IsolatedPointError,
                     SelectionError, RlenError)
from .kernels import EPANECHNIKOV, _jk_nb, get_kernel, jackknife_matrix
from .rlen import _check_grid, _map_columns, default_grid

log = logging.getLogger(__name__)

LAG_GRID_SIZE = 15
DEFAULT_M = 10
ISOLATED_FRACTION = 0.01


def lag_grid(n: int, m: int, size: int = LAG_GRID_SIZE) -> np.ndarray:
    return default_grid(n, m, size)


@numba.njit(cache=True, nogil=True)
def _nw_sums_nb(P, y, kind, rho, alpha, a1, a2, inv_h, kid):
    n, d = P.shape
    den = np.empty(n)
    num = np.empty(n)
    diag = np.empty(n)
    for i in range(n):
        s_den = 0.0
        s_num = 0.0
        for j in range(n):
            p = 1.0
            for k in range(d):
                p *= _jk_nb(P[j, k], kind[j, k], rho[j, k], alpha[j, k],
                            a1[j, k], a2[j, k], P[i, k], inv_h, kid)
                if p == 0.0:
                    break
            if j == i:
                diag[i] = p
            else:
                s_den += p
                s_num += p * y[j]
        den[i] = s_den
        num[i] = s_num
    return den, num, diag


@dataclass(frozen=True)
class SmootherSums:
    """Row sums of the product-kernel weights at one bandwidth.

    ``loo_den[i]`` and ``loo_num[i]`` exclude the self pair; ``diag[i]`` is
    the self weight K(x_i - x_i).
    """

    h: float
    loo_den: np.ndarray
    loo_num: np.ndarray
    diag: np.ndarray
    targets: np.ndarray

    @property
    def full_den(self):
        return self.loo_den + self.diag


def smoother_sums(emb: Embedding, h: float, kernel=EPANECHNIKOV) -> SmootherSums:
    kernel = get_kernel(kernel)
    P = np.ascontiguousarray(emb.vectors)
    tabs = _tables_2d(P, h, kernel)
    den, num, diag = _nw_sums_nb(P, np.ascontiguousarray(emb.targets), *tabs, 1.0 / h, kernel.kid)
    return SmootherSums(h, den, num, diag, emb.targets)


def _predictions(sums: SmootherSums, symmetric: bool):
    ok = sums.loo_den > 0.0
    num = sums.loo_num if symmetric else sums.loo_num + sums.diag * sums.targets
    pred = np.full(sums.loo_den.shape, np.nan)
    pred[ok] = num[ok] / sums.loo_den[ok]
    return pred, ok


def nw_loo_predict(emb: Embedding, h_star: float, i: int, kernel=EPANECHNIKOV,
                   symmetric: bool = False) -> float:
    if emb.n < 2:
        raise ArgumentError("need at least 2 embedded points")
    if not 0 <= i < emb.n:
        raise ArgumentError(f"index {i} outside [0, {emb.n})")
    kernel = get_kernel(kernel)
    w = np.ones(emb.n)
    for k in range(emb.m):
        w *= jackknife_matrix(emb.vectors[:, k], emb.vectors[i:i + 1, k], h_star, kernel)[:, 0]
    den = w.sum() - w[i]
    if not den > 0.0:
        raise IsolatedPointError("no neighbour within the kernel support", i=i, h=h_star)
    num = w @ emb.targets
    if symmetric:
        num -= w[i] * emb.targets[i]
    return float(num / den)


def smoother_matrix(emb: Embedding, h_star: float, kernel=EPANECHNIKOV) -> np.ndarray:
    """Materialized L with ``L[i, j] = K(x_j - x_i) / sum_s K(x_s - x_i)``."""
    W = np.ones((emb.n, emb.n))
    for k in range(emb.m):
        W *= jackknife_matrix(emb.vectors[:, k], emb.vectors[:, k], h_star, kernel).T
    rows = W.sum(axis=1)
    if np.any(rows <= 0.0):
        raise IsolatedPointError("nonpositive smoother row sum", h=h_star)
    return W / rows[:, None]


def _dof_from_sums(sums: SmootherSums) -> float:
    full = sums.full_den
    if np.any(full <= 0.0):
        raise IsolatedPointError("nonpositive smoother row sum", h=sums.h,
                                 count=int(np.sum(full <= 0.0)))
    return float(math.fsum(sums.diag / full))


def effective_dof(emb: Embedding, h_star: float, kernel=EPANECHNIKOV) -> float:
    """tr(L) from the row normalizers and self weights, without building L.

    In the interior every self weight equals K(0)^m / h^m; near the edges the
    Jackknife self weight depends on the point, so it is taken per row.
    """
    return _dof_from_sums(smoother_sums(emb, h_star, kernel))


@dataclass
class CVResult:
    h: float
    sigma2: float
    imputed: int
    scores: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def _cv_score(sums: SmootherSums, symmetric: bool):
    """Mean squared LOO error and the number of imputed rows, or None if disqualified."""
    pred, ok = _predictions(sums, symmetric)
    n = pred.size
    bad = int(n - ok.sum())
    if bad and bad / n >= ISOLATED_FRACTION:
        return None, bad
    if bad:
        pred[~ok] = sums.targets.mean()
    resid = sums.targets - pred
    return math.fsum(resid * resid) / n, bad


def loocv_bandwidth(emb: Embedding, grid=None, kernel=EPANECHNIKOV, symmetric: bool = False,
                    _sums_out: dict | None = None) -> CVResult:
    if grid is None:
        grid = lag_grid(emb.n, emb.m)
    elif callable(grid):
        grid = grid(emb.n, emb.m)
    grid = np.sort(_check_grid(grid))
    best = None
    scores = {}
    for h in grid:
        sums = smoother_sums(emb, float(h), kernel)
        score, bad = _cv_score(sums, symmetric)
        scores[float(h)] = score
        if score is None:
            continue
        if best is None or score < best[1]:
            best = (float(h), score, bad, sums)
    if best is None:
        raise SelectionError("isolated points disqualify every bandwidth", m=emb.m,
                             grid_size=grid.size)
    h, score, bad, sums = best
    res = CVResult(h, score, bad, scores)
    if bad:
        res.warnings.append(
            f"m={emb.m}, h={h:.6g}: {bad} isolated LOO predictions imputed with the target mean")
    if _sums_out is not None:
        _sums_out["sums"] = sums
    return res


@dataclass
class BICComponents:
    m: int
    n: int
    bic: float
    fit_term: float
    penalty_term: float
    h_star: float
    sigma2: float
    dof: float
    warnings: list = field(default_factory=list)


def bic_score(series, m: int, grid=None, kernel=EPANECHNIKOV, symmetric: bool = False) -> BICComponents:
    emb = embed(series, m)
    if np.ptp(emb.targets) == 0.0:
        # the printed LOO form is biased even here (y * (1 + w_ii / den)), so test directly
        raise DegenerateFitError("constant series, no prediction error to score", m=m)
    box = {}
    cv = loocv_bandwidth(emb, grid, kernel, symmetric, _sums_out=box)
    if not cv.sigma2 > 0.0:
        raise DegenerateFitError("zero prediction error, log undefined", m=m, h=cv.h)
    v = _dof_from_sums(box["sums"])
    n = emb.n
    fit = n * math.log(cv.sigma2)
    pen = v * math.log(n)
    return BICComponents(m, n, fit + pen, fit, pen, cv.h, cv.sigma2, v, cv.warnings)


@dataclass
class LagSelectionReport:
    M: int
    bic_bar: np.ndarray
    per_series: list  # per_series[j][m-1] -> BICComponents
    m_hat: int
    isolated_fraction: float = ISOLATED_FRACTION
    warnings: list = field(default_factory=list)

    def table(self, name: str) -> np.ndarray:
        """J x M array of one BICComponents field, e.g. ``table("h_star")``."""
        return np.array([[getattr(c, name) for c in row] for row in self.per_series])

    def to_dict(self):
        return {
            "M": self.M,
            "m_hat": self.m_hat,
            "bic_bar": [float(b) for b in self.bic_bar],
            "isolated_fraction": self.isolated_fraction,
            "per_series": [
                [{"m": c.m, "bic": c.bic, "h_star": c.h_star, "sigma2": c.sigma2, "dof": c.dof}
                 for c in row]
                for row in self.per_series
            ],
            "warnings": list(self.warnings),
        }


def select_lag(matrix, M: int = DEFAULT_M, grid=None, kernel=EPANECHNIKOV,
               symmetric: bool = False, threads: int = 1) -> LagSelectionReport:
    """Average the per-series BIC curves and return their argmin (ties: smallest m).

    ``grid`` may be a fixed bandwidth set, a callable ``grid(n, m)``, or
    ``None`` for the per-(n, m) default grid.
    """
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise ArgumentError(f"expected an N x J matrix, got shape {X.shape}")
    N, J = X.shape
    if not 1 <= M <= N - 2:
        raise ArgumentError(f"M={M} must lie in [1, N-2] for N={N}")
    for j in range(J):
        as_unit_series(X[:, j])

    def one(j):
        row = []
        for m in range(1, M + 1):
            try:
                row.append(bic_score(X[:, j], m, grid, kernel, symmetric))
            except RlenError as exc:
                exc.args = (f"series {j}: {exc}",)
                raise
        return row

    per_series = _map_columns(one, J, threads)
    bic_bar = np.array([math.fsum(per_series[j][m].bic for j in range(J)) / J for m in range(M)])
    m_hat = int(np.argmin(bic_bar)) + 1
    warnings = [w for row in per_series for c in row for w in c.warnings]
    return LagSelectionReport(M, bic_bar, per_series, m_hat, ISOLATED_FRACTION, warnings)
