"""Base kernels, boundary moments and the Jackknife boundary-corrected kernel.

All kernels are symmetric with support [-1, 1]. A :class:`KernelSpec` bundles
the base kernel with its partial moments

    omega_l(rho) = int_{-1}^{rho} u**l K(u) du,    l = 0, 1, 2

and the integral constants kappa, tau, tau1, tau2 that enter the asymptotic
centering and scale of the relative entropy estimator.

The univariate Jackknife kernel ``K_h^J(x - y)`` picks its branch from the
evaluation point ``x``:

* ``x in [h, 1-h]``: ``K((x-y)/h) / h``
* ``x in [0, h)``: ``k_rho((x-y)/h) / h`` with ``rho = x/h``
* ``x in (1-h, 1]``: ``k_rho((y-x)/h) / h`` with ``rho = (1-x)/h``

where ``k_rho`` is the signed combination of two self-normalized kernels with
widening factor ``alpha = 2 - rho``. At the right edge the boundary kernel is
applied to the reflected argument so that its support ``[-alpha, rho]`` faces
the inside of the unit interval.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np
from scipy import integrate

from .errors import ArgumentError, DegeneracyError

QUAD_TOL = 1e-10
GL_NODES = 64
_BETA_REL_TOL = 1e-12


def _epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _biweight(u):
    u = np.asarray(u, dtype=float)
    w = 1.0 - u * u
    return np.where(np.abs(u) <= 1.0, 0.9375 * w * w, 0.0)


def _triweight(u):
    u = np.asarray(u, dtype=float)
    w = 1.0 - u * u
    return np.where(np.abs(u) <= 1.0, 1.09375 * w * w * w, 0.0)


def _epanechnikov_omega(l, rho):
    rho = np.asarray(rho, dtype=float)
    if l == 0:
        return 0.5 + 0.75 * rho - 0.25 * rho**3
    if l == 1:
        c = (1.0 - rho) * (1.0 + rho)
        return -0.1875 * c * c
    return 0.75 * (rho**3 / 3.0 - rho**5 / 5.0 + 2.0 / 15.0)


@functools.lru_cache(maxsize=65536)
def _quad_omega(func, l, rho):
    def integrand(u):
        return u**l * float(func(u))

    # Integrate the short tail near rho=1 so omega_1 keeps relative precision.
    if rho > 0.0 and l in (0, 1):
        full = 1.0 if l == 0 else 0.0
        tail, _ = integrate.quad(integrand, rho, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL)
        return full - tail
    val, _ = integrate.quad(integrand, -1.0, rho, epsabs=QUAD_TOL, epsrel=QUAD_TOL)
    return val


def _gauss_legendre(a, b, n=GL_NODES):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (b + a) + half * x, half * w


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric kernel on [-1, 1] together with its cached integrals.

    ``kid`` selects the matching compiled evaluator used by the fast
    density and regression loops.
    """

    name: str
    kid: int
    func: Callable = field(repr=False, compare=False)
    analytic_omega: Callable | None = field(default=None, repr=False, compare=False)

    def __call__(self, u):
        return self.func(u)

    def omega(self, l, rho):
        """Partial moment ``int_{-1}^{rho} u**l K(u) du`` (vectorized over rho)."""
        if self.analytic_omega is not None:
            return self.analytic_omega(l, rho)
        rho_arr = np.asarray(rho, dtype=float)
        out = np.array([_quad_omega(self.func, l, float(r)) for r in rho_arr.ravel()])
        return out.reshape(rho_arr.shape) if rho_arr.ndim else float(out[0])

    @functools.cached_property
    def kappa(self) -> float:
        val, _ = integrate.quad(lambda u: float(self.func(u)) ** 2, -1.0, 1.0,
                                epsabs=QUAD_TOL, epsrel=QUAD_TOL)
        return val

    @functools.cached_property
    def _convolution_nodes(self):
        # Self-convolution c(v) = int K(u) K(u+v) du on [-1, 1]; it is smooth on
        # each half, so Gauss-Legendre on [-1, 0] and [0, 1] separately.
        vs, wv = [], []
        for a, b in ((-1.0, 0.0), (0.0, 1.0)):
            v, w = _gauss_legendre(a, b)
            vs.append(v)
            wv.append(w)
        v = np.concatenate(vs)
        wv = np.concatenate(wv)
        conv = np.empty_like(v)
        for k, vk in enumerate(v):
            u, wu = _gauss_legendre(max(-1.0, -1.0 - vk), min(1.0, 1.0 - vk))
            conv[k] = np.sum(wu * self.func(u) * self.func(u + vk))
        return v, wv, conv

    @functools.cached_property
    def tau(self) -> float:
        _, wv, conv = self._convolution_nodes
        return float(np.sum(wv * conv))

    @functools.cached_property
    def tau1(self) -> float:
        _, wv, conv = self._convolution_nodes
        return float(np.sum(wv * conv * conv))

    @functools.cached_property
    def tau2(self) -> float:
        v, wv, conv = self._convolution_nodes
        return float(np.sum(wv * self.func(v) * conv))


EPANECHNIKOV = KernelSpec("epanechnikov", 0, _epanechnikov, _epanechnikov_omega)
BIWEIGHT = KernelSpec("biweight", 1, _biweight)
TRIWEIGHT = KernelSpec("triweight", 2, _triweight)

KERNELS = {k.name: k for k in (EPANECHNIKOV, BIWEIGHT, TRIWEIGHT)}


def get_kernel(kernel) -> KernelSpec:
    if isinstance(kernel, KernelSpec):
        return kernel
    try:
        return KERNELS[kernel]
    except KeyError:
        raise ArgumentError(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}") from None


def base_kernel_eval(u, kernel=EPANECHNIKOV):
    """K(u), zero outside [-1, 1]."""
    out = get_kernel(kernel)(u)
    return float(out) if np.ndim(out) == 0 else out


def kernel_moment(l: int, rho: float, kernel=EPANECHNIKOV) -> float:
    if l not in (0, 1, 2):
        raise ArgumentError(f"moment order must be 0, 1 or 2, got {l}")
    if not 0.0 <= rho <= 1.0:
        raise ArgumentError(f"rho must lie in [0, 1], got {rho}")
    return float(get_kernel(kernel).omega(l, rho))


@dataclass(frozen=True)
class BoundaryCoeff:
    rho: float
    alpha: float
    beta: float


def _beta(rho, kernel):
    """Vectorized beta(rho); rho == 1 maps to the interior value 0."""
    rho = np.asarray(rho, dtype=float)
    alpha = 2.0 - rho
    q = rho / alpha
    r1 = kernel.omega(1, rho) / kernel.omega(0, rho)
    r1q = kernel.omega(1, q) / kernel.omega(0, q)
    num = r1
    left = alpha * r1q
    den = left - r1
    interior = rho >= 1.0
    bad = ~interior & (np.abs(den) <= _BETA_REL_TOL * np.maximum(np.abs(left), np.abs(r1)))
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))[0]
        raise DegeneracyError("boundary coefficient denominator vanished",
                              rho=float(np.atleast_1d(rho)[idx]))
    with np.errstate(invalid="ignore", divide="ignore"):
        beta = np.where(interior, 0.0, num / np.where(interior, 1.0, den))
    return alpha, beta


def boundary_coeff(rho: float, kernel=EPANECHNIKOV) -> BoundaryCoeff:
    if not 0.0 <= rho <= 1.0:
        raise ArgumentError(f"rho must lie in [0, 1], got {rho}")
    alpha, beta = _beta(rho, get_kernel(kernel))
    return BoundaryCoeff(float(rho), float(alpha), float(beta))


def boundary_kernel(u, rho: float, kernel=EPANECHNIKOV):
    """k_rho(u), supported on [-alpha, rho]."""
    kernel = get_kernel(kernel)
    bc = boundary_coeff(rho, kernel)
    u = np.asarray(u, dtype=float)
    a1 = (1.0 + bc.beta) / kernel.omega(0, rho)
    a2 = bc.beta / (bc.alpha * kernel.omega(0, rho / bc.alpha))
    val = a1 * kernel(u) - a2 * kernel(u / bc.alpha)
    out = np.where(u <= rho, val, 0.0)
    return float(out) if out.ndim == 0 else out


def _check_bandwidth(h):
    if not 0.0 < h < 0.5:
        raise ArgumentError(f"bandwidth must lie in (0, 0.5), got {h}")


@dataclass(frozen=True)
class BoundaryTable:
    """Per-point branch data for the Jackknife kernel at one bandwidth.

    ``kind`` is 0 (interior), 1 (left edge) or 2 (right edge); for edge points
    ``a1`` and ``a2`` are the weights of the two self-normalized components.
    """

    h: float
    kind: np.ndarray
    rho: np.ndarray
    alpha: np.ndarray
    a1: np.ndarray
    a2: np.ndarray


def boundary_table(x, h: float, kernel=EPANECHNIKOV) -> BoundaryTable:
    kernel = get_kernel(kernel)
    _check_bandwidth(h)
    x = np.asarray(x, dtype=float)
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ArgumentError("Jackknife kernel evaluation points must lie in [0, 1]")
    kind = np.zeros(x.shape, dtype=np.int64)
    kind[x < h] = 1
    kind[x > 1.0 - h] = 2
    rho = np.ones(x.shape)
    rho[kind == 1] = x[kind == 1] / h
    rho[kind == 2] = (1.0 - x[kind == 2]) / h
    alpha = np.ones(x.shape)
    a1 = np.ones(x.shape)
    a2 = np.zeros(x.shape)
    edge = kind != 0
    if np.any(edge):
        r = rho[edge]
        al, be = _beta(r, kernel)
        alpha[edge] = al
        a1[edge] = (1.0 + be) / kernel.omega(0, r)
        a2[edge] = be / (al * kernel.omega(0, r / al))
    return BoundaryTable(h, kind, rho, alpha, a1, a2)


def jackknife_matrix(x, y, h: float, kernel=EPANECHNIKOV, table: BoundaryTable | None = None):
    """Dense matrix ``M[a, b] = K_h^J(x[a] - y[b])`` (branch chosen by ``x[a]``)."""
    kernel = get_kernel(kernel)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if table is None:
        table = boundary_table(x, h, kernel)
    u = (x[:, None] - y[None, :]) / h
    u = np.where((table.kind == 2)[:, None], -u, u)
    rho = table.rho[:, None]
    alpha = table.alpha[:, None]
    edge_val = table.a1[:, None] * kernel(u) - table.a2[:, None] * kernel(u / alpha)
    edge_val = np.where(u <= rho, edge_val, 0.0)
    out = np.where((table.kind == 0)[:, None], kernel(u), edge_val)
    return out / h


def jackknife_eval(x: float, y: float, h: float, kernel=EPANECHNIKOV) -> float:
    if not 0.0 <= x <= 1.0:
        raise ArgumentError(f"x must lie in [0, 1], got {x}")
    _check_bandwidth(h)
    return float(jackknife_matrix([x], [y], h, kernel)[0, 0])


def product_kernel_eval(xvec, yvec, h: float, kernel=EPANECHNIKOV) -> float:
    xvec = np.atleast_1d(np.asarray(xvec, dtype=float))
    yvec = np.atleast_1d(np.asarray(yvec, dtype=float))
    if xvec.shape != yvec.shape or xvec.ndim != 1 or xvec.size == 0:
        raise ArgumentError(f"dimension mismatch: {xvec.shape} vs {yvec.shape}")
    _check_bandwidth(h)
    vals = [jackknife_eval(a, b, h, kernel) for a, b in zip(xvec, yvec)]
    return float(np.prod(vals))


# Compiled scalar evaluators shared by the O(n^2) loops in density/lag_select.

@numba.njit(cache=True, inline="always")
def _base_nb(u, kid):
    if u < -1.0 or u > 1.0:
        return 0.0
    w = 1.0 - u * u
    if kid == 0:
        return 0.75 * w
    if kid == 1:
        return 0.9375 * w * w
    return 1.09375 * w * w * w


@numba.njit(cache=True, inline="always")
def _jk_nb(xa, kind, rho, alpha, a1, a2, y, inv_h, kid):
    u = (xa - y) * inv_h
    if kind == 0:
        return _base_nb(u, kid) * inv_h
    if kind == 2:
        u = -u
    if u > rho:
        return 0.0
    return (a1 * _base_nb(u, kid) - a2 * _base_nb(u / alpha, kid)) * inv_h
