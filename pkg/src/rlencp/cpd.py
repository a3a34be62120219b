"""Change-point detection on a scalar sequence.

Segments are scored with the Gaussian mean-shift cost (sum of squared
deviations from the segment mean). Change-points are reported 1-based as the
first index of each new segment, so a shift after the first 30 values is
reported as 31.

Cost ties within a relative 1e-10 go to fewer change-points, then to the
lexicographically earlier index tuple.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .errors import ArgumentError, DegeneracyError, DomainError

TIE_RTOL = 1e-10


@dataclass
class ChangePointResult:
    changepoints: list
    segment_means: list
    penalty: float | None
    cost: float
    n: int = 0
    min_seg: int = 1

    @property
    def segments(self):
        bounds = [0] + [c - 1 for c in self.changepoints] + [self.n]
        return list(zip(bounds[:-1], bounds[1:]))

    def to_dict(self):
        return {"changepoints": [int(c) for c in self.changepoints],
                "segment_means": [float(v) for v in self.segment_means],
                "penalty": None if self.penalty is None else float(self.penalty),
                "cost": float(self.cost), "n": int(self.n), "min_seg": int(self.min_seg)}


class _Cost:
    """O(1) segment SSE from prefix sums of the centred data."""

    def __init__(self, values):
        x = np.asarray(values, dtype=float)
        if x.ndim != 1:
            raise ArgumentError(f"expected a 1-D sequence, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DomainError("sequence contains non-finite values")
        self.x = x
        z = x - x.mean() if x.size else x
        self.S = np.concatenate([[0.0], np.cumsum(z)])
        self.SS = np.concatenate([[0.0], np.cumsum(z * z)])

    def __call__(self, s, e):
        n = e - s
        d = self.S[e] - self.S[s]
        return max(self.SS[e] - self.SS[s] - d * d / n, 0.0)

    def means(self, bounds):
        return [float(self.x[a:b].mean()) for a, b in zip(bounds[:-1], bounds[1:])]


def _check(values, min_seg, n_segments=2):
    if int(min_seg) != min_seg or min_seg < 1:
        raise ArgumentError(f"min_seg must be a positive integer, got {min_seg}")
    cost = _Cost(values)
    n = cost.x.size
    if n < n_segments * min_seg:
        raise ArgumentError(f"sequence of length {n} too short for min_seg={min_seg}")
    return cost, n


def _path(prev, t):
    out = []
    while t > 0:
        t = int(prev[t])
        if t > 0:
            out.append(t)
    return tuple(reversed(out))


def _better(c, path, best_c, best_path):
    """Strictly preferable under (cost, #changepoints, indices) with a tie tolerance."""
    if best_path is None:
        return True
    tol = TIE_RTOL * max(1.0, abs(c), abs(best_c))
    if c < best_c - tol:
        return True
    if c > best_c + tol:
        return False
    return (len(path), path) < (len(best_path), best_path)


def _result(cost, n, taus, penalty, min_seg):
    bounds = [0, *taus, n]
    total = math.fsum(cost(a, b) for a, b in zip(bounds[:-1], bounds[1:]))
    if penalty is not None:
        total += penalty * len(taus)
    return ChangePointResult([t + 1 for t in taus], cost.means(bounds), penalty, total, n, min_seg)


def _partition(values, penalty, min_seg, prune):
    if penalty is None or not penalty >= 0 or not math.isfinite(penalty):
        raise ArgumentError(f"penalty must be a finite value >= 0, got {penalty}")
    cost, n = _check(values, min_seg, 2)
    F = np.full(n + 1, np.inf)
    F[0] = -penalty
    prev = np.zeros(n + 1, dtype=int)
    cand = [0]
    pending = {}  # pruning decided at t takes effect at t + min_seg
    for t in range(min_seg, n + 1):
        dead = pending.pop(t, ())
        if dead:
            cand = [c for c in cand if c not in dead]
        best_c, best_tau, best_p = np.inf, None, None
        for tau in cand:
            if t - tau < min_seg or not np.isfinite(F[tau]):
                continue
            c = F[tau] + cost(tau, t) + penalty
            p = _path(prev, tau) + ((tau,) if tau else ())
            if _better(c, p, best_c, best_p):
                best_c, best_tau, best_p = c, tau, p
        if best_tau is None:
            continue
        F[t], prev[t] = best_c, best_tau
        if prune:
            tol = TIE_RTOL * max(1.0, abs(F[t]))
            drop = {tau for tau in cand
                    if t - tau >= min_seg and F[tau] + cost(tau, t) > F[t] + tol}
            if drop:
                pending.setdefault(t + min_seg, set()).update(drop)
        # t becomes usable as a segment start once a min_seg-long segment fits after it
        cand.append(t)
    return _result(cost, n, list(_path(prev, n)), penalty, min_seg)


def pelt_detect(values, penalty=None, min_seg: int = 2) -> ChangePointResult:
    """Penalized mean-shift segmentation with PELT pruning (exact)."""
    if penalty is None:
        penalty = default_penalty(values)
    return _partition(values, float(penalty), min_seg, prune=True)


def optimal_partition(values, penalty: float, min_seg: int = 2) -> ChangePointResult:
    """The same recursion without pruning, O(n^2); used as the exactness oracle."""
    return _partition(values, float(penalty), min_seg, prune=False)


def dp_detect_k(values, K: int, min_seg: int = 2) -> ChangePointResult:
    """Least-squares segmentation with exactly K change-points."""
    if int(K) != K or K < 0:
        raise ArgumentError(f"K must be a nonnegative integer, got {K}")
    K = int(K)
    cost, n = _check(values, min_seg, K + 1)
    # D[k, t]: best cost of x[:t] in k+1 segments, paths[k][t]: its interior bounds
    D = np.full((K + 1, n + 1), np.inf)
    paths = [dict() for _ in range(K + 1)]
    for t in range(min_seg, n + 1):
        D[0, t] = cost(0, t)
        paths[0][t] = ()
    for k in range(1, K + 1):
        for t in range((k + 1) * min_seg, n + 1):
            best_c, best_p = np.inf, None
            for tau in range(k * min_seg, t - min_seg + 1):
                if not np.isfinite(D[k - 1, tau]):
                    continue
                c = D[k - 1, tau] + cost(tau, t)
                p = paths[k - 1][tau] + (tau,)
                if _better(c, p, best_c, best_p):
                    best_c, best_p = c, p
            D[k, t] = best_c
            paths[k][t] = best_p
    return _result(cost, n, list(paths[K][n]), None, min_seg)


def default_penalty(values) -> float:
    """2 * s2 * log(n) with s2 = var(first differences) / 2."""
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        raise ArgumentError("need at least 3 values for the default penalty")
    s2 = float(np.var(np.diff(x), ddof=1)) / 2.0
    return 2.0 * s2 * math.log(x.size)


@dataclass(frozen=True)
class WelchResult:
    t: float
    p: float
    df: float
    mean_a: float
    mean_b: float


def welch_t_test(a, b) -> WelchResult:
    """Two-sided Welch t-test with Satterthwaite degrees of freedom."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise ArgumentError(f"each group needs >= 2 values, got {a.size} and {b.size}")
    ma, mb = float(a.mean()), float(b.mean())
    qa = float(a.var(ddof=1)) / a.size
    qb = float(b.var(ddof=1)) / b.size
    se2 = qa + qb
    if se2 == 0.0:
        if ma == mb:
            return WelchResult(0.0, 1.0, float(a.size + b.size - 2), ma, mb)
        raise DegeneracyError("both groups are constant with different means", mean_a=ma, mean_b=mb)
    t = (ma - mb) / math.sqrt(se2)
    df = se2**2 / (qa**2 / (a.size - 1) + qb**2 / (b.size - 1))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return WelchResult(t, min(p, 1.0), df, ma, mb)


@dataclass
class MadSummary:
    mad: float | None
    failures: int
    successes: int
    exact: int
    taus: list = field(default_factory=list)

    @property
    def runs(self):
        return self.failures + self.successes

    @property
    def accuracy(self):
        return self.exact / self.runs if self.runs else float("nan")


def nearest_changepoint(changepoints, true_cp):
    """Detection closest to the truth (earlier on ties), or None if nothing was found."""
    if not changepoints:
        return None
    return min(changepoints, key=lambda c: (abs(c - true_cp), c))


def mad(detections, true_cp: int) -> MadSummary:
    """Mean absolute distance over runs that found a change-point; failures counted apart.

    ``detections`` holds one change-point list per run; each run is scored by
    its detection nearest to ``true_cp``.
    """
    taus = [nearest_changepoint(list(d), true_cp) for d in detections]
    hits = [t for t in taus if t is not None]
    value = math.fsum(abs(t - true_cp) for t in hits) / len(hits) if hits else None
    exact = sum(1 for t in hits if t == true_cp)
    return MadSummary(value, len(taus) - len(hits), len(hits), exact, taus)
