"""Velocity discretizations, periodic stencils, and Fourier-mode algebra."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psilab.discretize import (
    build_modal,
    build_nodal,
    build_xgrid,
    coefficient_from_name,
    fourier_mode,
    gauss_legendre_points,
    mode_coords,
)

# 4-point Gauss-Legendre nodes on [-1, 1], the nodal spectrum for a(v) = v
_GL4 = [0.8611363115940526, 0.3399810435848563, -0.3399810435848563, -0.8611363115940526]


def test_nodal_linear_spectrum_is_the_quadrature_nodes():
    vdisc = build_nodal(lambda v: v, gauss_legendre_points(4))
    np.testing.assert_allclose(vdisc.spectrum.eigenvalues, _GL4, atol=1e-13)


def test_nodal_square_spectrum():
    vdisc = build_nodal(lambda v: v**2, gauss_legendre_points(4))
    expect = sorted((np.asarray(_GL4) ** 2).tolist(), reverse=True)
    np.testing.assert_allclose(vdisc.spectrum.eigenvalues, expect, atol=1e-13)


@pytest.mark.parametrize("n_v", [1, 2, 4, 8])
def test_nodal_eigenvectors_diagonalize_coeff(n_v):
    vdisc = build_nodal(lambda v: v, gauss_legendre_points(n_v))
    vecs, vals = vdisc.spectrum.eigenvectors, vdisc.spectrum.eigenvalues
    np.testing.assert_allclose(vecs.T @ vecs, np.eye(n_v), atol=1e-12)
    np.testing.assert_allclose(vdisc.coeff @ vecs, vecs @ np.diag(vals), atol=1e-12)
    # |A| shares the eigenvectors with |eigenvalue| on the diagonal
    np.testing.assert_allclose(
        vdisc.coeff_abs @ vecs, vecs @ np.diag(np.abs(vals)), atol=1e-12
    )


def test_modal_linear_matrix_is_legendre_tridiagonal():
    """a(v) = v in the orthonormal Legendre basis has the known off-diagonal
    n / sqrt(4n^2 - 1); the spectrum must match the nodal one."""
    vdisc = build_modal(lambda v: v, 4)
    expect = np.zeros((4, 4))
    for n in range(1, 4):
        expect[n - 1, n] = expect[n, n - 1] = n / np.sqrt(4.0 * n * n - 1.0)
    np.testing.assert_allclose(vdisc.coeff, expect, atol=1e-12)
    np.testing.assert_allclose(vdisc.spectrum.eigenvalues, _GL4, atol=1e-12)


def test_modal_square_diagonal_entries():
    # <P_n, v^2 P_n> = sum of squared couplings; sanity against quadrature
    vdisc = build_modal(lambda v: v**2, 3)
    np.testing.assert_allclose(np.diag(vdisc.coeff), [1 / 3, 3 / 5, 11 / 21], atol=1e-12)


@pytest.mark.parametrize("n_x", [3, 4, 8, 16, 64])
def test_stencils_are_circulant_and_antisymmetric(n_x):
    grid = build_xgrid(n_x, 2.0 * np.pi / n_x)
    ma, mb = grid.m_alpha, grid.m_beta
    assert ma.shape == (n_x, n_x) and mb.shape == (n_x, n_x)
    np.testing.assert_allclose(ma, -ma.T, atol=0)
    np.testing.assert_allclose(mb, mb.T, atol=0)
    for shift in range(1, n_x):
        np.testing.assert_allclose(np.roll(np.roll(ma, shift, 0), shift, 1), ma, atol=0)
        np.testing.assert_allclose(np.roll(np.roll(mb, shift, 0), shift, 1), mb, atol=0)


def test_stencil_rows_small_grid():
    grid = build_xgrid(8, 2.0 * np.pi / 8)
    row_a = np.zeros(8)
    row_a[1], row_a[-1] = 1.0, -1.0  # forward neighbor minus backward neighbor
    np.testing.assert_allclose(grid.m_alpha[0], row_a, atol=0)
    row_b = np.zeros(8)
    row_b[0], row_b[1], row_b[-1] = -2.0, 1.0, 1.0
    np.testing.assert_allclose(grid.m_beta[0], row_b, atol=0)


@pytest.mark.parametrize("n_x", [3, 4, 8, 16, 64])
def test_fourier_modes_are_stencil_eigenvectors(n_x):
    grid = build_xgrid(n_x, 2.0 * np.pi / n_x)
    for m in range(n_x):
        mode = fourier_mode(m, n_x)
        mc = mode_coords(m, n_x)
        np.testing.assert_allclose(grid.m_alpha @ mode, mc.alpha * mode, atol=1e-12)
        np.testing.assert_allclose(grid.m_beta @ mode, mc.beta * mode, atol=1e-12)


@settings(deadline=None, max_examples=120)
@given(st.integers(3, 256).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 255))))
def test_mode_coordinate_identities(pair):
    n_x, m = pair
    mc = mode_coords(m % n_x, n_x)
    assert 0.0 <= mc.y <= 2.0
    assert mc.z**2 == pytest.approx(mc.y * (2.0 - mc.y), abs=1e-12)
    assert mc.alpha == pytest.approx(2j * mc.z, abs=1e-14)
    assert mc.beta == pytest.approx(-2.0 * mc.y, abs=1e-14)


def test_mode_y_covers_zero_to_two():
    ys = [mode_coords(m, 16).y for m in range(16)]
    assert min(ys) == 0.0
    assert max(ys) == pytest.approx(2.0)


def test_coefficient_registry():
    v = np.array([-1.5, 0.0, 2.0])
    np.testing.assert_allclose(coefficient_from_name("linear")(v), v)
    np.testing.assert_allclose(coefficient_from_name("abs")(v), np.abs(v))
    np.testing.assert_allclose(coefficient_from_name("square")(v), v**2)
    np.testing.assert_allclose(coefficient_from_name("const:2.5")(v), [2.5, 2.5, 2.5])


def test_coefficient_unknown_name_rejected():
    with pytest.raises(ValueError, match="nope"):
        coefficient_from_name("nope")


def test_gauss_legendre_nodes():
    pts = gauss_legendre_points(4)
    np.testing.assert_allclose(np.sort(pts), sorted(_GL4), atol=1e-13)
    np.testing.assert_allclose(pts + pts[::-1], 0.0, atol=1e-15)
    with pytest.raises(ValueError):
        gauss_legendre_points(0)
