"""Series generators for the simulation studies, plus preprocessing helpers.

Randomness comes from numpy's Philox counter-based generator. Column ``j``
of a case matrix with master seed ``s`` uses ``SeedSequence(s, spawn_key=(j,))``,
so any column can be regenerated on its own and the output never depends on
the order in which columns are produced.

Innovations for a series of length N with burnin b are the first N + b draws
of the stream; the burnin prefix is dropped after the recursion, so burnin b
gives exactly the tail of a burnin-0 run of length N + b.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter, lfiltic
from scipy.special import expit

from .errors import ArgumentError, DomainError
from .rlen import check_stationary, companion_radius, yule_walker_autocorr

KINDS = ("case1_model1", "case1_model2", "case3_model1", "case3_model2", "ar", "sarima")
DEFAULT_BURNIN = 500


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: dict = field(default_factory=dict)
    init: tuple = ()
    burnin: int = DEFAULT_BURNIN

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if int(self.burnin) != self.burnin or self.burnin < 0:
            raise ArgumentError(f"burnin must be a nonnegative integer, got {self.burnin}")
        object.__setattr__(self, "init", tuple(float(v) for v in self.init))
        if self.kind == "ar":
            if self.params.get("sigma2", 1.0) <= 0:
                raise ArgumentError("AR innovation variance must be positive")
            check_stationary(self.params["phi"])

    def to_dict(self):
        return {"kind": self.kind, "params": _plain(self.params), "init": list(self.init),
                "burnin": int(self.burnin)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], dict(d.get("params", {})), tuple(d.get("init", ())),
                   int(d.get("burnin", DEFAULT_BURNIN)))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# presets --------------------------------------------------------------------

def case1_model1(alpha: float, sigma: float = 0.4, init=(1.0, 1.0), burnin: int = 0) -> ModelSpec:
    return ModelSpec("case1_model1", {"alpha": float(alpha), "sigma": sigma}, init, burnin)


def case1_model2(alpha: float, sigma: float = 0.5, init=(1.0, 1.0), burnin: int = 0) -> ModelSpec:
    return ModelSpec("case1_model2", {"alpha": float(alpha), "sigma": sigma}, init, burnin)


def case3_model1(sigma: float = 0.2, init=(0.0,), burnin: int = DEFAULT_BURNIN) -> ModelSpec:
    return ModelSpec("case3_model1", {"sigma": sigma}, init, burnin)


def case3_model2(sigma: float = 0.2, init=(0.0,), burnin: int = DEFAULT_BURNIN) -> ModelSpec:
    return ModelSpec("case3_model2", {"sigma": sigma}, init, burnin)


def ar_model(phi, sigma2: float = 1.0, init=(), burnin: int = DEFAULT_BURNIN) -> ModelSpec:
    return ModelSpec("ar", {"phi": [float(p) for p in phi], "sigma2": float(sigma2)}, init, burnin)


def sarima_model(phi=(), theta=(), seasonal=None, D: int = 0, Ds: int = 0, s: int = 1,
                 c: float = 0.0, sigma2: float = 1.0, burnin: int = 0) -> ModelSpec:
    """phi(L) Phi(L) (1-L)^D (1-L^s)^Ds x_t = c + theta(L) eps_t.

    ``phi`` and ``seasonal`` hold the coefficients with the sign convention
    ``phi(L) = 1 - sum phi_k L^k`` and ``Phi(L) = 1 - sum Phi_k L^k``;
    ``seasonal`` maps lag -> Phi_k. ``theta(L) = 1 + sum theta_k L^k``.
    """
    params = {"phi": [float(v) for v in phi], "theta": [float(v) for v in theta],
              "seasonal": {int(k): float(v) for k, v in (seasonal or {}).items()},
              "D": int(D), "Ds": int(Ds), "s": int(s), "c": float(c), "sigma2": float(sigma2)}
    return ModelSpec("sarima", params, (), burnin)


# The three fitted seasonal processes, coefficients as printed.
SARIMA_PROCESSES = {
    1: dict(phi=(1.9414, -0.693), theta=(1.82984, 0.9931), seasonal={75: 0.02037},
            D=2, Ds=1, s=75, c=2.9993e-6, sigma2=2e-7),
    2: dict(phi=(1.9631, -0.9851), theta=(1.9619, 0.9910), seasonal={67: -0.2818},
            D=2, Ds=1, s=67, c=2.1477e-6, sigma2=2e-7),
    3: dict(phi=(1.9768, -0.98801), theta=(0.3421,), seasonal={81: 0.1474},
            D=2, Ds=1, s=81, c=3.9159e-7, sigma2=2e-7),
}


def sarima_process(k: int) -> ModelSpec:
    if k not in SARIMA_PROCESSES:
        raise ArgumentError(f"sarima process must be one of {sorted(SARIMA_PROCESSES)}, got {k}")
    return sarima_model(**SARIMA_PROCESSES[k])


# generation -----------------------------------------------------------------

def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None or isinstance(seed, bool) or int(seed) != seed or seed < 0:
        raise ArgumentError(f"seed must be a nonnegative integer, got {seed!r}")
    return np.random.SeedSequence(int(seed))


def column_seed(master: int, j: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=(int(j),))


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(as_seed_sequence(seed)))


def _nonlinear(kind, p, eps, init):
    n = eps.size
    lags = 2 if kind.startswith("case1") else 1
    buf = list(init) if init else [0.0] * lags
    if len(buf) != lags:
        raise ArgumentError(f"{kind} needs {lags} initial values, got {len(buf)}")
    out = np.empty(n)
    a = p.get("alpha", 0.0)
    x2, x1 = (buf[0], buf[1]) if lags == 2 else (0.0, buf[0])
    for i in range(n):
        if kind == "case1_model1":
            v = -x2 * math.exp(-x2 * x2 / 2) + math.cos(a * x2) * x1 / (1 + x2 * x2) + eps[i]
        elif kind == "case1_model2":
            v = -x2 * math.exp(-x2 * x2 / 2) + math.sin(a * x2) * x1 / (1 + x2 * x2) + eps[i]
        elif kind == "case3_model1":
            v = 0.138 + (0.316 + 0.982 * x1) * math.exp(-3.89 * x1 * x1) + eps[i]
        else:
            v = -0.437 - (0.659 + 1.260 * x1) * math.exp(-3.89 * x1 * x1) + eps[i]
        out[i] = v
        x2, x1 = x1, v
    return out


def _ar(phi, eps, init):
    a = np.concatenate([[1.0], -np.asarray(phi, dtype=float)])
    if init:
        if len(init) != len(phi):
            raise ArgumentError(f"AR({len(phi)}) needs {len(phi)} initial values, got {len(init)}")
        # lfiltic wants the most recent output first
        zi = lfiltic([1.0], a, y=list(init)[::-1])
        return lfilter([1.0], a, eps, zi=zi)[0]
    return lfilter([1.0], a, eps)


def _sarima_ar_poly(p):
    a = np.concatenate([[1.0], -np.asarray(p["phi"], dtype=float)])
    seas = p.get("seasonal", {})
    if seas:
        order = max(int(k) for k in seas)
        b = np.zeros(order + 1)
        b[0] = 1.0
        for k, v in seas.items():
            b[int(k)] = -float(v)
        a = np.polymul(a[::-1], b[::-1])[::-1]
    return a


def _sarima(p, eps):
    ar = _sarima_ar_poly(p)
    if ar.size > 1 and companion_radius(-ar[1:]) >= 1.0:
        raise DomainError("sarima AR part phi(L)Phi(L) is not stationary "
                          f"(spectral radius {companion_radius(-ar[1:]):.6g})")
    ma = np.concatenate([[1.0], np.asarray(p["theta"], dtype=float)])
    w = lfilter([1.0], ar, lfilter(ma, [1.0], eps) + p["c"])
    s = p["s"]
    seas_den = np.zeros(s + 1)
    seas_den[0], seas_den[s] = 1.0, -1.0
    for _ in range(p["Ds"]):
        w = lfilter([1.0], seas_den, w)
    for _ in range(p["D"]):
        w = np.cumsum(w)
    return w


def innovation_scale(spec: ModelSpec) -> float:
    p = spec.params
    if "sigma2" in p:
        return math.sqrt(p["sigma2"])
    return float(p.get("sigma", 1.0))


def gen_series(spec: ModelSpec, N: int, seed) -> np.ndarray:
    """Raw (untransformed) series of length N from ``spec``."""
    if int(N) != N or N <= 0:
        raise ArgumentError(f"series length must be a positive integer, got {N}")
    total = int(N) + int(spec.burnin)
    eps = innovation_scale(spec) * make_rng(seed).standard_normal(total)
    if spec.kind == "ar":
        x = _ar(spec.params["phi"], eps, spec.init)
    elif spec.kind == "sarima":
        x = _sarima(spec.params, eps)
    else:
        x = _nonlinear(spec.kind, spec.params, eps, spec.init)
    x = x[spec.burnin:]
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{spec.kind} simulation overflowed")
    return x


def ar_variance(phi, sigma2: float) -> float:
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    rho = yule_walker_autocorr(phi, phi.size)
    return float(sigma2 / (1.0 - np.dot(phi, rho)))


def matched_noise_variance(phi_x, phi_y, sigma1_sq: float) -> float:
    """Innovation variance giving AR process ``phi_y`` the same variance as ``phi_x``."""
    phi_x = np.atleast_1d(np.asarray(phi_x, dtype=float))
    phi_y = np.atleast_1d(np.asarray(phi_y, dtype=float))
    dx = 1.0 - np.dot(phi_x, yule_walker_autocorr(phi_x, phi_x.size))
    dy = 1.0 - np.dot(phi_y, yule_walker_autocorr(phi_y, phi_y.size))
    return float(sigma1_sq * dy / dx)


def logistic_transform(series) -> np.ndarray:
    return expit(np.asarray(series, dtype=float))


def extract_min_variance_window(series, window: int):
    """Start (0-based) and slice of the length-``window`` stretch with minimal variance.

    One pass with a Welford-style add/remove update; ties go to the first start.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if int(window) != window or window < 1:
        raise ArgumentError(f"window must be a positive integer, got {window}")
    if window > n:
        raise ArgumentError(f"window {window} longer than series ({n})")
    w = int(window)
    mean = 0.0
    m2 = 0.0
    for k in range(w):
        d = x[k] - mean
        mean += d / (k + 1)
        m2 += d * (x[k] - mean)
    best, best_var = 0, max(m2, 0.0) / w
    variances = [best_var]
    for s in range(1, n - w + 1):
        new, old = x[s + w - 1], x[s - 1]
        new_mean = mean + (new - old) / w
        m2 += (new - old) * (new - new_mean + old - mean)
        mean = new_mean
        v = max(m2, 0.0) / w
        variances.append(v)
        if v < best_var:
            best, best_var = s, v
    return best, x[best:best + w].copy()


def butterworth_hook(series):
    """Filtering placeholder: returns the series unchanged.

    Replace through ``PREPROCESSORS`` with a real filter once order and cutoff
    are known.
    """
    return np.asarray(series, dtype=float)


PREPROCESSORS = {"none": butterworth_hook, "butterworth": butterworth_hook}


# case matrices --------------------------------------------------------------

@dataclass(frozen=True)
class CaseMatrixSpec:
    spec1: ModelSpec
    spec2: ModelSpec
    P1: int
    P2: int
    N: int
    seed: int

    def __post_init__(self):
        if self.P1 < 0 or self.P2 < 0 or self.P1 + self.P2 < 1:
            raise ArgumentError(f"need P1, P2 >= 0 with P1 + P2 >= 1, got {self.P1}, {self.P2}")
        if self.N < 3:
            raise ArgumentError(f"series length must be >= 3, got {self.N}")
        as_seed_sequence(self.seed)

    @property
    def true_cp(self):
        return self.P1 + 1 if self.P1 and self.P2 else None

    def column_spec(self, j: int) -> ModelSpec:
        return self.spec1 if j < self.P1 else self.spec2

    def to_dict(self):
        return {"spec1": self.spec1.to_dict(), "spec2": self.spec2.to_dict(),
                "P1": self.P1, "P2": self.P2, "N": self.N, "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, d):
        return cls(ModelSpec.from_dict(d["spec1"]), ModelSpec.from_dict(d["spec2"]),
                   int(d["P1"]), int(d["P2"]), int(d["N"]), int(d["seed"]))


def case1_spec(alpha: float = 1.5, seed: int = 0, P1: int = 30, P2: int = 70, N: int = 400):
    return CaseMatrixSpec(case1_model1(alpha), case1_model2(alpha), P1, P2, N, seed)


def case2_spec(seed: int = 0, P1: int = 60, P2: int = 40, N: int = 500, sigma1_sq: float = 0.1):
    phi_x, phi_y = (0.8, -0.3, 0.1), (0.7, -0.3, 0.1)
    s2 = matched_noise_variance(phi_x, phi_y, sigma1_sq)
    return CaseMatrixSpec(ar_model(phi_x, sigma1_sq), ar_model(phi_y, s2), P1, P2, N, seed)


def case3_spec(seed: int = 0, P1: int = 160, P2: int = 80, N: int = 500, sigma: float = 0.2):
    return CaseMatrixSpec(case3_model1(sigma), case3_model2(sigma), P1, P2, N, seed)


CASE_PRESETS = {"case1": case1_spec, "case2": case2_spec, "case3": case3_spec}


def gen_column(spec: CaseMatrixSpec, j: int, raw: bool = False) -> np.ndarray:
    if not 0 <= j < spec.P1 + spec.P2:
        raise ArgumentError(f"column {j} outside [0, {spec.P1 + spec.P2})")
    x = gen_series(spec.column_spec(j), spec.N, column_seed(spec.seed, j))
    return x if raw else logistic_transform(x)


def build_case_matrix(spec: CaseMatrixSpec, raw: bool = False):
    """N x (P1+P2) matrix of logistic-transformed columns and the true change-point.

    The change-point is the 1-based index of the first column from ``spec2``
    (``None`` when either regime is empty).
    """
    J = spec.P1 + spec.P2
    X = np.empty((spec.N, J))
    for j in range(J):
        X[:, j] = gen_column(spec, j, raw)
    return X, spec.true_cp
