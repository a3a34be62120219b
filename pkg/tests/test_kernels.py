import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from rlencp.errors import ArgumentError
from rlencp.kernels import (BIWEIGHT, boundary_table, EPANECHNIKOV, TRIWEIGHT, base_kernel_eval, boundary_coeff,
                            boundary_kernel, jackknife_eval, jackknife_matrix, kernel_moment,
                            product_kernel_eval)


def epa(u):
    return 0.75 * (1 - u * u) if abs(u) <= 1 else 0.0


def omega_oracle(l, rho, k=epa):
    return integrate.quad(lambda u: u**l * k(u), -1, rho, epsabs=1e-13)[0]


def test_base_kernel_examples():
    assert base_kernel_eval(0.0) == 0.75
    assert base_kernel_eval(1.5) == 0.0
    assert base_kernel_eval(0.5) == 0.5625


@given(st.floats(-3, 3))
def test_base_kernel_symmetric_and_bounded(u):
    assert base_kernel_eval(u) == base_kernel_eval(-u)
    assert 0.0 <= base_kernel_eval(u) <= 0.75
    if abs(u) > 1:
        assert base_kernel_eval(u) == 0.0


@pytest.mark.parametrize("k", [EPANECHNIKOV, BIWEIGHT, TRIWEIGHT])
def test_kernel_normalized_and_second_moment(k):
    f = lambda u: float(k(u))
    assert integrate.quad(f, -1, 1)[0] == pytest.approx(1.0, abs=1e-10)
    assert np.isfinite(integrate.quad(lambda u: u * u * f(u), -1, 1)[0])


def test_kernel_moment_examples():
    assert kernel_moment(0, 1) == pytest.approx(1.0, abs=1e-14)
    assert kernel_moment(1, 1) == pytest.approx(0.0, abs=1e-14)
    # int_{-1}^0 0.75 u (1 - u^2) du = 0.75 * (-1/2 + 1/4)
    assert kernel_moment(1, 0) == pytest.approx(-0.1875, abs=1e-14)


@given(st.sampled_from([0, 1, 2]), st.floats(0, 1))
def test_kernel_moment_matches_quadrature(l, rho):
    assert kernel_moment(l, rho) == pytest.approx(omega_oracle(l, rho), abs=1e-10)


@pytest.mark.parametrize("k", [BIWEIGHT, TRIWEIGHT])
@pytest.mark.parametrize("rho", [0.0, 0.3, 0.77, 1.0])
def test_quadrature_moments_other_kernels(k, rho):
    f = lambda u: float(k(u))
    for l in (0, 1, 2):
        want = integrate.quad(lambda u: u**l * f(u), -1, rho, epsabs=1e-13)[0]
        assert kernel_moment(l, rho, k) == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("l,rho", [(3, 0.5), (0, -0.1), (1, 1.2)])
def test_kernel_moment_rejects(l, rho):
    with pytest.raises(ArgumentError):
        kernel_moment(l, rho)


def beta_oracle(rho):
    a = 2 - rho
    R1 = lambda r: omega_oracle(1, r) / omega_oracle(0, r)
    return R1(rho) / (a * R1(rho / a) - R1(rho))


def test_boundary_coeff_examples():
    assert boundary_coeff(1.0).beta == 0.0
    assert boundary_coeff(0.0).beta == pytest.approx(1.0, abs=1e-14)
    for r in (0.0, 0.2, 0.9, 1.0):
        assert boundary_coeff(r).alpha == 2.0 - r


@given(st.floats(0, 0.999))
def test_boundary_beta_matches_oracle(rho):
    assert boundary_coeff(rho).beta == pytest.approx(beta_oracle(rho), rel=1e-7, abs=1e-9)


def test_beta_limit_near_interior_is_finite():
    # both sides of the ratio vanish like (1-rho)^2; the limit is 1/3
    assert boundary_coeff(1 - 1e-5).beta == pytest.approx(1 / 3, rel=1e-3)


def test_k1_equals_base_kernel():
    u = np.linspace(-1, 1, 2001)
    assert np.max(np.abs(boundary_kernel(u, 1.0) - EPANECHNIKOV(u))) < 1e-10


@pytest.mark.parametrize("rho", [0.0, 0.25, 0.6])
def test_boundary_kernel_moments(rho):
    # k_rho integrates to 1 with vanishing first moment over its support
    a = 2 - rho
    k = lambda u: float(boundary_kernel(u, rho))
    assert integrate.quad(k, -a, rho, points=[-1, 0])[0] == pytest.approx(1, abs=1e-9)
    assert integrate.quad(lambda u: u * k(u), -a, rho, points=[-1, 0])[0] == pytest.approx(0, abs=1e-9)
    assert k(rho + 1e-9) == 0.0 and k(-a - 1e-9) == 0.0


def test_jackknife_examples():
    assert jackknife_eval(0.5, 0.5, 0.1) == pytest.approx(7.5)
    # (2 K(0)/omega0(0) - 0.5 K(0)/omega0(0)) / h with omega0(0) = 1/2
    assert jackknife_eval(0.0, 0.0, 0.1) == pytest.approx((2 * 0.75 / 0.5 - 0.5 * 0.75 / 0.5) / 0.1)
    assert jackknife_eval(0.0, 0.0, 0.1) == pytest.approx(22.5)
    assert jackknife_eval(0.5, 0.8, 0.1) == 0.0
    assert jackknife_eval(1.0, 1.0, 0.1) == pytest.approx(22.5)


@pytest.mark.parametrize("h", [0.0, -0.1, 0.5, 0.7])
def test_jackknife_rejects_bandwidth(h):
    with pytest.raises(ArgumentError):
        jackknife_eval(0.5, 0.5, h)


def test_jackknife_rejects_x_outside():
    with pytest.raises(ArgumentError):
        jackknife_eval(1.2, 0.5, 0.1)


def test_jackknife_can_be_negative_at_boundary():
    xs = np.linspace(0, 0.1, 11)
    ys = np.linspace(0, 0.3, 301)
    assert np.min(jackknife_matrix(xs, ys, 0.1)) < 0


@pytest.mark.parametrize("h", [0.05, 0.1, 0.2])
def test_interior_mass_preservation(h):
    for y in np.linspace(2 * h, 1 - 2 * h, 7):
        f = lambda x: jackknife_eval(x, y, h)
        mass = integrate.quad(f, 0, 1, points=[h, 1 - h, y - h, y, y + h], limit=200)[0]
        assert mass == pytest.approx(1.0, abs=1e-6)


@given(st.floats(0, 1), st.floats(0.02, 0.45))
def test_boundary_mass_in_y(x, h):
    # for any evaluation point the kernel integrates to one over y
    f = lambda y: jackknife_eval(x, y, h)
    t = boundary_table([x], h)
    a, r = t.alpha[0] * h, t.rho[0] * h
    kinks = sorted({x - h, x, x + h, x - a, x + a, x - r, x + r})
    mass = integrate.quad(f, x - 2 * h, x + 2 * h, points=kinks, limit=400, epsabs=1e-12)[0]
    assert mass == pytest.approx(1.0, abs=1e-7)


def test_product_kernel_examples():
    assert product_kernel_eval([0.3], [0.35], 0.1) == jackknife_eval(0.3, 0.35, 0.1)
    assert product_kernel_eval([0.5, 0.5], [0.5, 0.5], 0.1) == pytest.approx(56.25)
    assert product_kernel_eval([0.05, 0.5], [0.05 + 0.25, 0.5], 0.1) == 0.0
    with pytest.raises(ArgumentError):
        product_kernel_eval([0.5, 0.5], [0.5], 0.1)


@given(st.lists(st.floats(0.2, 0.8), min_size=2, max_size=2),
       st.lists(st.floats(0.2, 0.8), min_size=2, max_size=2), st.floats(0.05, 0.15))
def test_product_kernel_symmetric_interior(x, y, h):
    assert product_kernel_eval(x, y, h) == pytest.approx(product_kernel_eval(y, x, h), rel=1e-12)


def test_constants():
    assert EPANECHNIKOV.kappa == pytest.approx(0.6, abs=1e-8)
    conv = lambda v: integrate.quad(lambda u: epa(u) * epa(u + v), -1, 1, epsabs=1e-13)[0]
    tau = integrate.quad(conv, -1, 1, epsabs=1e-12)[0]
    tau1 = integrate.quad(lambda v: conv(v) ** 2, -1, 1, epsabs=1e-12)[0]
    tau2 = integrate.quad(lambda v: epa(v) * conv(v), -1, 1, epsabs=1e-12)[0]
    assert EPANECHNIKOV.tau == pytest.approx(tau, abs=1e-8)
    assert EPANECHNIKOV.tau1 == pytest.approx(tau1, abs=1e-8)
    assert EPANECHNIKOV.tau2 == pytest.approx(tau2, abs=1e-8)
    for k in (EPANECHNIKOV, BIWEIGHT, TRIWEIGHT):
        assert 0 < k.tau < 1 and k.kappa > 0 and k.tau1 > 0 and k.tau2 > 0
