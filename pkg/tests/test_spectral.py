import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from chstab.spectral import (
    Discretization, SpectralField, apply_phi, basis_derivatives, bilaplacian,
    from_grid, interpolate_pw, interpolation_error, laplacian, to_grid,
)


def random_field(disc, rng, decay=0.0):
    k = np.linalg.norm(disc.mode_indices, axis=1)
    return SpectralField(disc, rng.standard_normal(disc.size) / (1 + k) ** decay)


def gauss_nodes(n):
    x, w = leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


# -- Discretization ---------------------------------------------------------

@pytest.mark.parametrize("dim", [1, 2])
def test_mu_zero_only_for_constant_and_increasing(dim):
    d = Discretization(dim, 6)
    assert d.mu[0] == 0.0
    assert np.all(d.mu[1:] > 0)
    k = d.mode_indices
    axis0 = d.mu[(k[:, 1:] == 0).all(axis=1)] if dim == 2 else d.mu
    assert np.all(np.diff(axis0) > 0)


@pytest.mark.parametrize("dim,N,Q", [(1, 8, 12), (1, 5, 10), (2, 6, 9), (2, 8, 16)])
def test_discrete_gram_matrix_is_identity(dim, N, Q):
    d = Discretization(dim, N, Q)
    S = d.synthesis
    G1 = S.T @ S / Q
    assert np.abs(G1 - np.eye(N)).max() < 1e-12
    if dim == 2:
        E = np.kron(S, S)
        assert np.abs(E.T @ E / Q**2 - np.eye(N * N)).max() < 1e-12


def test_basis_satisfies_neumann_conditions():
    N = 12
    ends = np.array([0.0, 1.0])
    d1 = basis_derivatives(N, ends)
    mu1 = np.pi**2 * np.arange(N) ** 2
    assert np.abs(d1).max() < 1e-12
    # d_n Delta phi_k = -mu_k d_n phi_k
    assert np.abs(mu1[:, None] * d1).max() < 1e-9


def test_grid_below_dealias_minimum_rejected():
    with pytest.raises(ValueError):
        Discretization(1, 8, 11)
    with pytest.raises(ValueError):
        Discretization(3, 4)


# -- transforms ---------------------------------------------------------------

def test_to_grid_trivial_cases():
    d = Discretization(2, 4)
    assert np.all(to_grid(SpectralField.zeros(d)) == 0)
    assert np.allclose(to_grid(SpectralField.constant(d, 1.0)), 1.0, atol=0)


def test_to_grid_single_mode_value_at_quarter():
    d = Discretization(1, 2, 6)  # x_1 = 0.25
    f = SpectralField(d, [0.0, 1.0])
    vals = to_grid(f)
    assert d.x[1] == pytest.approx(0.25)
    assert vals[1] == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(vals, math.sqrt(2) * np.cos(np.pi * d.x), atol=1e-15)


def test_from_grid_constant():
    d = Discretization(2, 5)
    f = from_grid(np.full(d.grid_shape, 3.0), d)
    assert f.coeffs[0] == pytest.approx(3.0, abs=1e-14)
    assert np.abs(f.coeffs[1:]).max() < 1e-14


@pytest.mark.parametrize("dim,N,Q", [(1, 16, 32), (1, 7, 11), (2, 8, 16), (2, 6, 9)])
def test_round_trip(dim, N, Q):
    d = Discretization(dim, N, Q)
    rng = np.random.default_rng(1)
    for _ in range(5):
        f = random_field(d, rng)
        assert np.abs(from_grid(to_grid(f), d).coeffs - f.coeffs).max() < 1e-12


def test_from_grid_cos_cubed_matches_quadrature():
    d = Discretization(1, 6, 12)
    f = from_grid(np.cos(np.pi * d.x) ** 3, d)
    expected = []
    for k in range(d.modes):
        ck = 1.0 if k == 0 else math.sqrt(2)
        val, _ = quad(lambda x: np.cos(np.pi * x) ** 3 * ck * np.cos(k * np.pi * x), 0, 1,
                      epsabs=1e-14, epsrel=1e-14)
        expected.append(val)
    assert np.abs(f.coeffs - expected).max() < 1e-12
    # cos^3 = (3 cos + cos 3x)/4 in the orthonormal basis
    assert f.coeffs[1] == pytest.approx(3 / (4 * math.sqrt(2)), abs=1e-13)
    assert f.coeffs[3] == pytest.approx(1 / (4 * math.sqrt(2)), abs=1e-13)


def test_from_grid_dimension_mismatch():
    d = Discretization(2, 4)
    with pytest.raises(ValueError):
        from_grid(np.zeros(d.grid), d)


def test_parseval_against_gauss_quadrature():
    rng = np.random.default_rng(2)
    x, w = gauss_nodes(64)
    for dim in (1, 2):
        d = Discretization(dim, 8)
        for _ in range(50):
            f = random_field(d, rng)
            if dim == 1:
                q = np.sum(w * f.evaluate(x[:, None]) ** 2)
            else:
                X, Y = np.meshgrid(x, x, indexing="ij")
                vals = f.evaluate(np.column_stack([X.ravel(), Y.ravel()]))
                q = np.sum(np.outer(w, w).ravel() * vals**2)
            assert abs(f.norm_sq() - q) <= 1e-10 * max(1.0, q)


def test_laplacian_norm_matches_quadrature():
    rng = np.random.default_rng(3)
    d = Discretization(1, 8)
    f = random_field(d, rng)
    x, w = gauss_nodes(64)
    k = np.arange(d.modes)
    ck = np.where(k == 0, 1.0, math.sqrt(2))
    lap = -(ck[:, None] * (np.pi * k[:, None]) ** 2 * np.cos(np.pi * k[:, None] * x)).T @ f.coeffs
    assert f.laplacian_norm_sq() == pytest.approx(np.sum(w * lap**2), rel=1e-12)


# -- differential operators ---------------------------------------------------

def test_laplacian_of_constant_vanishes():
    d = Discretization(2, 4)
    assert np.all(laplacian(SpectralField.constant(d, 2.0)).coeffs == 0)
    assert np.all(bilaplacian(SpectralField.constant(d, 2.0)).coeffs == 0)


def test_laplacian_symbols():
    d1 = Discretization(1, 3)
    e1 = SpectralField(d1, [0, 1, 0])
    assert laplacian(e1).coeffs[1] == pytest.approx(-np.pi**2)
    assert bilaplacian(e1).coeffs[1] == pytest.approx(np.pi**4)
    d2 = Discretization(2, 3)
    c = np.zeros(9)
    c[1 * 3 + 1] = 1.0
    assert bilaplacian(SpectralField(d2, c)).coeffs[4] == pytest.approx(4 * np.pi**4)
    assert 4 * np.pi**4 == pytest.approx(389.636, abs=1e-3)


def test_nu_bilaplacian_eigenvalues_sorted():
    d = Discretization(2, 5)
    k = d.mode_indices
    expected = np.sort(0.01 * np.pi**4 * (k[:, 0] ** 2 + k[:, 1] ** 2) ** 2)
    assert np.allclose(np.sort(0.01 * d.mu**2), expected, rtol=1e-14)


# -- nonlinearity ---------------------------------------------------------------

def test_apply_phi_trivial():
    d = Discretization(2, 4)
    assert np.all(apply_phi(SpectralField.zeros(d)).coeffs == 0)
    out = apply_phi(SpectralField.constant(d, 0.7))
    assert out.coeffs[0] == pytest.approx(0.7**3 - 0.7, abs=1e-14)
    assert np.abs(out.coeffs[1:]).max() < 1e-14


def test_apply_phi_cos():
    d = Discretization(1, 8)
    f = SpectralField(d, np.eye(8)[1] / math.sqrt(2))  # f = cos(pi x)
    expected = np.zeros(8)
    # -cos(pi x)/4 + cos(3 pi x)/4, and cos(k pi x) = phi_k / sqrt(2)
    expected[1] = -0.25 / math.sqrt(2)
    expected[3] = 0.25 / math.sqrt(2)
    assert np.abs(apply_phi(f).coeffs - expected).max() < 1e-12


def cube_coeffs_1d(k, N):
    """Coefficients of phi_k^3 truncated to N modes, from cos^3 = (3cos + cos3)/4."""
    out = np.zeros(N)
    if k == 0:
        out[0] = 1.0
        return out
    out[k] += 1.5
    if 3 * k < N:
        out[3 * k] += 0.5
    return out


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 15), a=st.floats(-3, 3, allow_nan=False))
def test_apply_phi_single_mode_1d(k, a):
    d = Discretization(1, 16)
    c = np.zeros(16)
    c[k] = a
    expected = a**3 * cube_coeffs_1d(k, 16) - c
    assert np.abs(apply_phi(SpectralField(d, c)).coeffs - expected).max() < 1e-12 * max(1, abs(a) ** 3)


@settings(max_examples=40, deadline=None)
@given(k1=st.integers(0, 9), k2=st.integers(0, 9), a=st.floats(-2, 2, allow_nan=False))
def test_apply_phi_single_mode_2d(k1, k2, a):
    N = 10
    d = Discretization(2, N)
    c = np.zeros(N * N)
    c[k1 * N + k2] = a
    expected = a**3 * np.outer(cube_coeffs_1d(k1, N), cube_coeffs_1d(k2, N)).ravel() - c
    assert np.abs(apply_phi(SpectralField(d, c)).coeffs - expected).max() < 1e-12 * max(1, abs(a) ** 3)


def test_multiplication_matrix_matches_transform():
    rng = np.random.default_rng(4)
    for dim in (1, 2):
        d = Discretization(dim, 6)
        w = rng.standard_normal(d.grid_shape)
        A = d.multiplication_matrix(w)
        v = rng.standard_normal(d.size)
        assert np.allclose(A @ v, d.analyze(w * d.synthesize(v)), atol=1e-13)


# -- piecewise-constant interpolation ------------------------------------------

def test_interpolate_constant():
    d = Discretization(2, 6)
    f = SpectralField.constant(d, 1.5)
    assert np.allclose(interpolate_pw(f, 3), 1.5)
    assert interpolation_error(f, 3) < 1e-14


def test_interpolate_cos_single_cell():
    d = Discretization(1, 4)
    f = SpectralField(d, np.eye(4)[1] / math.sqrt(2))
    assert interpolate_pw(f, 1)[0] == pytest.approx(0.0, abs=1e-15)


def test_interpolate_rejects_M0():
    with pytest.raises(ValueError):
        interpolate_pw(SpectralField.zeros(Discretization(1, 4)), 0)


def test_interpolation_error_matches_independent_quadrature():
    rng = np.random.default_rng(5)
    d = Discretization(1, 10)
    f = random_field(d, rng, decay=2)
    M = 3
    cells = interpolate_pw(f, M)
    total = 0.0
    for j in range(M):
        val, _ = quad(lambda x: (f.evaluate([[x]])[0] - cells[j]) ** 2, j / M, (j + 1) / M,
                      epsabs=1e-14, epsrel=1e-12)
        total += val
    assert interpolation_error(f, M) == pytest.approx(math.sqrt(total), rel=1e-8)


@pytest.mark.parametrize("dim", [1, 2])
def test_interpolation_estimate_constant_is_stable(dim):
    rng = np.random.default_rng(6)
    d = Discretization(dim, 16)
    for _ in range(3):
        f = random_field(d, rng, decay=4)
        scale = f.norm() + math.sqrt(f.laplacian_norm_sq())
        fitted = [interpolation_error(f, M) * M / scale for M in (2, 4, 8, 16)]
        assert max(fitted) / min(fitted) < 1.5
