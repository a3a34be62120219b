"""End-to-end runs: lag selection, per-series statistic, change-point detection.

Reports are plain JSON. Keys keep a fixed order and floats are written with
``repr`` (shortest round-trip form), so identical runs give identical bytes.
Wall-clock timing is left out unless ``record_timing`` is set, because it
would break that guarantee.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .apen import ApEnConfig, apen
from .cpd import ChangePointResult, dp_detect_k, pelt_detect, welch_t_test
from .errors import ArgumentError, DomainError, ParseError, RlenError, StageError
from .lag_select import LAG_GRID_SIZE, select_lag
from .rlen import ENTROPY_GRID_SIZE, _map_columns, default_grid, entropy_grid, entropy_profile
from .simulate import (CASE_PRESETS, PREPROCESSORS, CaseMatrixSpec, build_case_matrix,
                       logistic_transform)

METHODS = ("rlen", "apen", "mean", "variance")


@dataclass
class SeriesMatrix:
    values: np.ndarray
    names: list

    @property
    def shape(self):
        return self.values.shape


# CSV -----------------------------------------------------------------------

def _parse_row(row, line):
    out = []
    for cell in row:
        try:
            v = float(cell)
        except ValueError:
            raise ParseError(f"non-numeric cell {cell.strip()!r}", line) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite cell {cell.strip()!r}", line)
        out.append(v)
    return out


def parse_matrix_csv(text: str) -> SeriesMatrix:
    rows = [(i + 1, r) for i, r in enumerate(csv.reader(io.StringIO(text)))
            if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty file")
    names = None
    first_line, first = rows[0]
    try:
        _parse_row(first, first_line)
    except ParseError:
        names = [c.strip() for c in first]
        rows = rows[1:]
    width = len(names) if names is not None else len(rows[0][1])
    data = []
    for line, r in rows:
        if len(r) != width:
            raise ParseError(f"expected {width} fields, found {len(r)}", line)
        data.append(_parse_row(r, line))
    if len(data) < 2:
        raise ParseError(f"need at least 2 data rows, found {len(data)}")
    X = np.array(data, dtype=float)
    if names is None:
        names = [f"s{j + 1}" for j in range(width)]
    return SeriesMatrix(X, names)


def read_matrix_csv(path) -> SeriesMatrix:
    with open(path, newline="") as fh:
        return parse_matrix_csv(fh.read())


def format_matrix_csv(X, names=None) -> str:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if names is not None:
        w.writerow(names)
    for row in X:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_matrix_csv(path, X, names=None):
    with open(path, "w", newline="") as fh:
        fh.write(format_matrix_csv(X, names))


# config --------------------------------------------------------------------

@dataclass
class RunConfig:
    input: str | None = None
    simulate: str | None = None
    sim_params: dict = field(default_factory=dict)
    m: int | None = None
    M: int = 10
    method: str = "rlen"
    lag_grid_size: int = LAG_GRID_SIZE
    entropy_grid_size: int = ENTROPY_GRID_SIZE
    grid_lo: float = 0.5
    grid_hi: float = 4.0
    lag_bandwidths: list | None = None
    entropy_bandwidths: list | None = None
    symmetric_loo: bool = False
    apen_r: float = 0.2
    apen_r_mode: str = "std"
    penalty: float | None = None
    k: int | None = None
    min_seg: int = 2
    seed: int = 0
    threads: int = 1
    auto_transform: bool = True
    preprocess: str = "none"
    record_timing: bool = False
    output: str | None = None

    def validate(self):
        if (self.input is None) == (self.simulate is None):
            raise ArgumentError("specify exactly one of input and simulate")
        if self.method not in METHODS:
            raise ArgumentError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.m is not None and self.m < 1:
            raise ArgumentError(f"m must be >= 1, got {self.m}")
        if self.M < 1:
            raise ArgumentError(f"M must be >= 1, got {self.M}")
        if self.penalty is not None and self.k is not None:
            raise ArgumentError("give either a penalty or a fixed change-point count, not both")
        if self.penalty is not None and not self.penalty >= 0:
            raise ArgumentError(f"penalty must be >= 0, got {self.penalty}")
        if self.k is not None and self.k < 0:
            raise ArgumentError(f"k must be >= 0, got {self.k}")
        if self.threads < 1:
            raise ArgumentError(f"threads must be >= 1, got {self.threads}")
        if self.seed < 0:
            raise ArgumentError(f"seed must be >= 0, got {self.seed}")
        if self.preprocess not in PREPROCESSORS:
            raise ArgumentError(f"unknown preprocess hook {self.preprocess!r}")
        if not 0 < self.grid_lo < self.grid_hi:
            raise ArgumentError("need 0 < grid_lo < grid_hi")
        return self

    def to_dict(self, echo: bool = True):
        d = asdict(self)
        if echo:
            # parallelism and destination never change results
            d.pop("threads")
            d.pop("output")
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ArgumentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunReport:
    data: dict
    lag_selection: dict | None
    m: int | None
    statistic: dict
    detection: dict
    groups: list
    tests: list
    config: dict
    warnings: list
    timing: dict | None = None
    library: str = "rlencp"
    version: str = __version__

    def to_dict(self):
        return {
            "library": self.library,
            "version": self.version,
            "config": self.config,
            "data": self.data,
            "lag_selection": self.lag_selection,
            "m": self.m,
            "statistic": self.statistic,
            "detection": self.detection,
            "groups": self.groups,
            "tests": self.tests,
            "warnings": self.warnings,
            "timing": self.timing,
        }

    @classmethod
    def from_dict(cls, d):
        keys = ("data", "lag_selection", "m", "statistic", "detection", "groups", "tests",
                "config", "warnings", "timing", "library", "version")
        return cls(**{k: d[k] for k in keys})

    @property
    def changepoints(self):
        return list(self.detection["changepoints"])


# data ----------------------------------------------------------------------

def _load_simulation(cfg: RunConfig):
    name = cfg.simulate
    if name in CASE_PRESETS:
        params = dict(cfg.sim_params)
        try:
            spec = CASE_PRESETS[name](seed=cfg.seed, **params)
        except TypeError as exc:
            raise ArgumentError(f"bad parameters for {name}: {exc}") from None
    else:
        try:
            with open(name) as fh:
                spec = CaseMatrixSpec.from_dict(json.load(fh))
        except FileNotFoundError:
            raise ArgumentError(f"--simulate expects case1, case2, case3 or a spec file; "
                                f"{name!r} not found") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ArgumentError(f"invalid simulation spec {name!r}: {exc}") from None
    X, cp = build_case_matrix(spec)
    names = [f"s{j + 1}" for j in range(X.shape[1])]
    return SeriesMatrix(X, names), {"source": "simulate", "spec": spec.to_dict(), "true_cp": cp}


def to_unit_interval(X):
    """Standardize each column, then apply the logistic map.

    Centering and scaling is a monotone map per column, so the relative entropy
    is unchanged; it keeps the logistic map away from saturation when the raw
    scale is large or small.
    """
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    if np.any(sd == 0.0):
        bad = [int(j) for j in np.flatnonzero(sd == 0.0)]
        raise DomainError(f"constant column(s) {bad} cannot be standardized")
    return logistic_transform((X - mu) / sd)


def prepare_matrix(X, cfg: RunConfig, warnings: list):
    X = np.asarray(X, dtype=float)
    hook = PREPROCESSORS[cfg.preprocess]
    if cfg.preprocess != "none":
        X = np.column_stack([hook(X[:, j]) for j in range(X.shape[1])])
    transformed = False
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        if not cfg.auto_transform:
            raise DomainError("values outside [0, 1] and auto-transform disabled")
        X = to_unit_interval(X)
        transformed = True
        warnings.append("input outside [0, 1]: columns standardized and logistic-transformed")
    return X, transformed


# stages --------------------------------------------------------------------

def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except RlenError as exc:
        raise StageError(name, exc) from exc


def _grid(n, m, size, cfg, explicit):
    if explicit is not None:
        return np.asarray(explicit, dtype=float)
    return default_grid(n, m, size, cfg.grid_lo, cfg.grid_hi)


def _statistic(X, m, cfg: RunConfig):
    N, J = X.shape
    if cfg.method == "rlen":
        if cfg.entropy_bandwidths is not None:
            grid = np.asarray(cfg.entropy_bandwidths, dtype=float)
        else:
            grid = lambda x, mm: entropy_grid(x, mm, cfg.entropy_grid_size, cfg.grid_lo, cfg.grid_hi)
        prof = entropy_profile(X, m, grid, threads=cfg.threads)
        return {"method": "rlen", "m": m, "values": prof.values.tolist(),
                "bandwidths": prof.bandwidths.tolist(),
                "s_count": [e.s_count for e in prof.estimates]}
    if cfg.method == "apen":
        conf = ApEnConfig(m, cfg.apen_r, cfg.apen_r_mode)
        vals = _map_columns(lambda j: apen(X[:, j], conf), J, cfg.threads)
        return {"method": "apen", "m": m, "values": [float(v) for v in vals],
                "r": cfg.apen_r, "r_mode": cfg.apen_r_mode}
    if cfg.method == "mean":
        return {"method": "mean", "values": X.mean(axis=0).tolist()}
    return {"method": "variance", "values": X.var(axis=0, ddof=1).tolist()}


def _detect(values, cfg: RunConfig) -> ChangePointResult:
    if cfg.k is not None:
        return dp_detect_k(values, cfg.k, cfg.min_seg)
    return pelt_detect(values, cfg.penalty, cfg.min_seg)


def _groups(values, cp: ChangePointResult):
    v = np.asarray(values, dtype=float)
    groups, tests = [], []
    for a, b in cp.segments:
        seg = v[a:b]
        groups.append({"start": a + 1, "end": b, "size": b - a, "mean": float(seg.mean()),
                       "std": float(seg.std(ddof=1)) if seg.size > 1 else None})
    segs = cp.segments
    for i in range(len(segs) - 1):
        (a0, b0), (a1, b1) = segs[i], segs[i + 1]
        entry = {"segments": [i + 1, i + 2], "t": None, "df": None, "p": None}
        if b0 - a0 >= 2 and b1 - a1 >= 2:
            w = welch_t_test(v[a0:b0], v[a1:b1])
            entry.update(t=w.t, df=w.df, p=w.p)
        tests.append(entry)
    return groups, tests


def run_pipeline(config: RunConfig) -> RunReport:
    cfg = config.validate()
    warnings: list = []
    clock = {}
    t0 = time.perf_counter()

    if cfg.input is not None:
        try:
            sm = read_matrix_csv(cfg.input)
        except OSError as exc:
            raise StageError("load", DomainError(f"cannot read {cfg.input}: {exc}")) from exc
        except RlenError as exc:
            raise StageError("load", exc) from exc
        data = {"source": "input", "path": cfg.input, "true_cp": None}
    else:
        sm, data = _stage("simulate", _load_simulation, cfg)
    X, transformed = _stage("prepare", prepare_matrix, sm.values, cfg, warnings)
    N, J = X.shape
    data.update(N=N, J=J, columns=list(sm.names), transformed=transformed)
    clock["load"] = time.perf_counter() - t0

    lag = None
    m = cfg.m
    if m is None and cfg.method in ("rlen", "apen"):
        t1 = time.perf_counter()
        grid = lambda n, mm: _grid(n, mm, cfg.lag_grid_size, cfg, cfg.lag_bandwidths)
        rep = _stage("lag_selection", select_lag, X, cfg.M, grid, symmetric=cfg.symmetric_loo,
                     threads=cfg.threads)
        lag = rep.to_dict()
        warnings.extend(rep.warnings)
        m = rep.m_hat
        clock["lag_selection"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    stat = _stage("statistic", _statistic, X, m, cfg)
    clock["statistic"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    cp = _stage("detection", _detect, stat["values"], cfg)
    groups, tests = _stage("tests", _groups, stat["values"], cp)
    clock["detection"] = time.perf_counter() - t3
    clock["total"] = time.perf_counter() - t0

    return RunReport(data=data, lag_selection=lag, m=m, statistic=stat, detection=cp.to_dict(),
                     groups=groups, tests=tests, config=cfg.to_dict(), warnings=warnings,
                     timing=clock if cfg.record_timing else None)


# serialization -------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_report(report) -> str:
    d = report.to_dict() if hasattr(report, "to_dict") else report
    return json.dumps(_jsonable(d), indent=2, allow_nan=False) + "\n"


def write_report(report, path) -> None:
    text = dumps_report(report)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_report(path) -> RunReport:
    with open(path) as fh:
        return RunReport.from_dict(json.load(fh))
