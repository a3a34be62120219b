import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import trapezoid
from hypothesis.extra.numpy import arrays

from rlencp.density import (embed, loo_density, loo_densities, loo_densities_streaming,
                            series_loo_densities)
from rlencp.errors import ArgumentError, DomainError
from rlencp.kernels import jackknife_eval


def test_embed_example():
    e = embed([0.1, 0.2, 0.3, 0.4], 2)
    assert e.n == 2
    np.testing.assert_array_equal(e.vectors, [[0.1, 0.2], [0.2, 0.3]])
    np.testing.assert_array_equal(e.targets, [0.3, 0.4])


def test_embed_bounds():
    assert embed(np.linspace(0, 1, 10), 8).n == 2
    with pytest.raises(ArgumentError):
        embed(np.linspace(0, 1, 10), 0)
    with pytest.raises(ArgumentError):
        embed(np.linspace(0, 1, 10), 9)
    with pytest.raises(DomainError):
        embed([0.1, 1.2, 0.3, 0.5], 1)


def test_loo_density_examples():
    assert loo_density([0.5, 0.5], 0, 0.1) == pytest.approx(7.5)
    assert loo_density([0.3, 0.3, 0.9], 0, 0.1) == pytest.approx(3.75)
    with pytest.raises(ArgumentError):
        loo_density([0.5], 0, 0.1)


def test_loo_density_by_hand(rng):
    P = rng.random((12, 2))
    h = 0.3
    for i in range(12):
        want = sum(jackknife_eval(P[i, 0], P[j, 0], h) * jackknife_eval(P[i, 1], P[j, 1], h)
                   for j in range(12) if j != i) / 11
        assert loo_density(P, i, h) == pytest.approx(want, rel=1e-12, abs=1e-12)


@given(arrays(float, st.integers(3, 30), elements=st.floats(0.2, 0.8)), st.floats(0.02, 0.19))
def test_interior_density_nonnegative(x, h):
    assert np.all(loo_densities(x, h) >= 0)


def test_permutation_invariance(rng):
    P = rng.random((40, 2))
    perm = np.concatenate([[0], 1 + rng.permutation(39)])
    assert loo_density(P, 0, 0.2) == pytest.approx(loo_density(P[perm], 0, 0.2), rel=1e-13)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_dense_and_streaming_agree(rng, d):
    P = rng.random((150, d))
    for h in (0.05, 0.2, 0.45):
        np.testing.assert_allclose(loo_densities_streaming(P, h), loo_densities(P, h),
                                   rtol=1e-12, atol=1e-12)


def test_series_path_matches_dense(rng):
    x = rng.random(120)
    for m in (1, 3):
        e = embed(x, m)
        full = np.column_stack([e.vectors, e.targets])
        for h in (0.07, 0.3):
            f, g, g1 = series_loo_densities(x, m, h)
            np.testing.assert_allclose(f, loo_densities(full, h), rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(g, loo_densities(e.vectors, h), rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(g1, loo_densities(e.targets, h), rtol=1e-12, atol=1e-12)


def test_density_integrates_to_one(rng):
    # Monte Carlo: average of the density estimate over a fine grid of [0, 1]
    n = 2000
    pts = rng.random(n)
    h = n ** (-0.2)
    grid = np.linspace(0, 1, 801)
    from rlencp.kernels import jackknife_matrix
    dens = jackknife_matrix(grid, pts, h).mean(axis=1)
    assert trapezoid(dens, grid) == pytest.approx(1.0, abs=0.05)
    assert np.mean(loo_densities_streaming(pts, h)) == pytest.approx(1.0, abs=0.05)
