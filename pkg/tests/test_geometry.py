import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtnlab.geometry import (
    BoundaryField,
    Geometry,
    basis_eigenvalue,
    curvature_data,
    laplace_beltrami_basis,
    tangential_divergence,
    tangential_gradient,
)

GEOM = Geometry(n_theta=64, n_r=16, n_modes=8)


def test_geometry_validation():
    with pytest.raises(ValueError):
        Geometry(R=2.0, R_ext=1.0)
    with pytest.raises(ValueError):
        Geometry(n_theta=100)  # not a power of two
    with pytest.raises(ValueError):
        Geometry(n_theta=64, n_modes=32)  # aliasing rule
    with pytest.raises(ValueError):
        Geometry(eps0=0.9)


def test_values_coeffs_roundtrip():
    f = GEOM.field_from_function(lambda t: np.cos(3 * t) + 0.5 * np.sin(t))
    g = BoundaryField.from_values(GEOM, f.values)
    assert np.allclose(f.coeffs, g.coeffs, atol=1e-14)
    assert f.is_real


def test_tangential_gradient_cos():
    f = GEOM.field_from_function(np.cos)
    df = tangential_gradient(f)
    assert np.allclose(df.real_values, -np.sin(GEOM.theta), atol=1e-13)


def test_gradient_of_constant_is_zero():
    assert tangential_gradient(GEOM.constant_field(3.7)).l2_norm() == 0.0


def test_gradient_scaled_radius():
    geom = Geometry(R=2.0, R_ext=4.0, eps0=0.6, n_theta=64, n_r=16, n_modes=8)
    f = geom.field_from_function(lambda t: np.cos(3 * t))
    df = tangential_gradient(f)
    # arc-length derivative: -(3/2) sin(3 theta)
    assert np.allclose(df.real_values, -1.5 * np.sin(3 * geom.theta), atol=1e-13)


def test_divergence_product_rule():
    f = GEOM.field_from_function(np.cos)
    v = GEOM.constant_field(1.0)
    lhs = tangential_divergence(f * v)
    rhs = f * tangential_divergence(v) + tangential_gradient(f) * v
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-13)


def test_stokes_integral_vanishes():
    v = GEOM.field_from_function(lambda t: np.sin(2 * t))
    div = tangential_divergence(v)
    integral = div.inner(GEOM.constant_field(1.0))
    assert abs(integral) <= 1e-12


def test_curvature_data():
    assert curvature_data(GEOM) == (1.0, 1.0)
    g2 = Geometry(R=2.0, R_ext=4.0, eps0=0.6, n_theta=64, n_r=16, n_modes=8)
    assert curvature_data(g2) == (0.5, 0.5)


def test_basis_normalization_and_gram():
    basis = laplace_beltrami_basis(GEOM, 7)
    assert np.allclose(basis[0].real_values, 1.0 / np.sqrt(2 * np.pi), atol=1e-14)
    assert np.allclose(
        basis[1].real_values, np.cos(GEOM.theta) / np.sqrt(np.pi), atol=1e-13
    )
    assert np.allclose(
        basis[2].real_values, np.sin(GEOM.theta) / np.sqrt(np.pi), atol=1e-13
    )
    gram = np.array([[float(np.real(a.inner(b))) for b in basis] for a in basis])
    assert np.allclose(gram, np.eye(7), atol=1e-12)


def test_basis_rejects_overflow():
    with pytest.raises(ValueError):
        laplace_beltrami_basis(GEOM, 2 * GEOM.n_modes + 2)


def test_basis_eigenvalues():
    for j, lam in [(0, 0.0), (1, 1.0), (2, 1.0), (3, 4.0), (4, 4.0)]:
        assert basis_eigenvalue(j, GEOM) == lam


@given(
    st.lists(
        st.tuples(
            st.integers(-8, 8),
            st.floats(-2, 2, allow_nan=False),
            st.floats(-2, 2, allow_nan=False),
        ),
        min_size=1,
        max_size=6,
    )
)
@settings(max_examples=50, deadline=None)
def test_parseval(modes):
    z = np.zeros(2 * GEOM.n_modes + 1, dtype=complex)
    for n, re, im in modes:
        z[GEOM.n_modes + n] += re + 1j * im
    f = BoundaryField(GEOM, z)
    grid_l2 = np.sqrt(
        GEOM.R * np.sum(np.abs(f.values) ** 2) * 2 * np.pi / GEOM.n_theta
    )
    assert np.isclose(grid_l2, f.l2_norm(), rtol=1e-12, atol=1e-12)


@given(st.integers(-8, 8), st.integers(-8, 8))
@settings(max_examples=40, deadline=None)
def test_skew_adjointness(n, k):
    f = GEOM.mode_field(n)
    g = GEOM.mode_field(k)
    lhs = tangential_gradient(f).inner(g)
    rhs = -f.inner(tangential_divergence(g))
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


def test_hs_norm_monotone_in_s():
    f = GEOM.field_from_function(lambda t: np.cos(2 * t) + 0.3 * np.sin(5 * t))
    norms = [f.hs_norm(s) for s in (0.0, 0.5, 1.0, 1.5)]
    assert all(a <= b + 1e-14 for a, b in zip(norms, norms[1:]))
    assert np.isclose(norms[0], f.l2_norm(), rtol=1e-13)


def test_product_dealiasing_exact():
    # product of two band-limited fields is captured exactly after truncation
    f = GEOM.mode_field(3)
    g = GEOM.mode_field(4)
    assert np.isclose((f * g).mode(7), 1.0, atol=1e-13)
    assert np.isclose((f * g).mode(3), 0.0, atol=1e-14)
