"""Approximate Entropy (Pincus), the baseline complexity score.

ApEn(m, r) = Phi^m(r) - Phi^{m+1}(r) with Chebyshev distance and self-matches
counted, so every template matches at least itself and the logs are finite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ArgumentError, DomainError


@dataclass(frozen=True)
class ApEnConfig:
    m: int = 2
    r: float = 0.2
    r_mode: str = "std"  # "std": r times the series std, "absolute": r as given

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ArgumentError(f"ApEn template length must be >= 1, got {self.m}")
        if not self.r > 0:
            raise ArgumentError(f"ApEn tolerance must be positive, got {self.r}")
        if self.r_mode not in ("std", "absolute"):
            raise ArgumentError(f"r_mode must be 'std' or 'absolute', got {self.r_mode!r}")

    def resolve_r(self, series) -> float:
        if self.r_mode == "absolute":
            return float(self.r)
        return float(self.r * np.std(series))


@numba.njit(cache=True, nogil=True)
def _phi_nb(x, m, r):
    n = x.size - m + 1
    acc = 0.0
    for i in range(n):
        c = 0
        for j in range(n):
            ok = True
            for k in range(m):
                if abs(x[i + k] - x[j + k]) > r:
                    ok = False
                    break
            if ok:
                c += 1
        acc += np.log(c / n)
    return acc / n


def phi(series, m: int, r: float) -> float:
    return float(_phi_nb(np.ascontiguousarray(series, dtype=float), m, r))


def apen(series, config: ApEnConfig = ApEnConfig()) -> float:
    x = np.ascontiguousarray(series, dtype=float)
    if x.ndim != 1:
        raise ArgumentError(f"expected a 1-D series, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("series contains non-finite values")
    if x.size <= config.m + 1:
        raise ArgumentError(f"ApEn needs N > m + 1, got N={x.size}, m={config.m}")
    r = config.resolve_r(x)
    if not r > 0:
        # std mode on a constant series: every template matches, ApEn is 0
        if config.r_mode == "std" and np.ptp(x) == 0.0:
            return 0.0
        raise ArgumentError(f"resolved tolerance must be positive, got {r}")
    return float(_phi_nb(x, config.m, r) - _phi_nb(x, config.m + 1, r))


def apen_profile(matrix, config: ApEnConfig = ApEnConfig()) -> np.ndarray:
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise ArgumentError(f"expected an N x J matrix, got shape {X.shape}")
    return np.array([apen(X[:, j], config) for j in range(X.shape[1])])
