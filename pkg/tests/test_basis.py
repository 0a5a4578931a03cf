import numpy as np
import pytest
from hypothesis import given, strategies as st

from elastica.basis import SplineBasis, SplineFunction
from elastica.errors import OutOfDomainError


@pytest.mark.parametrize("degree,n_knots,periodic,size", [
    (0, 6, False, 5),
    (1, 6, False, 6),
    (2, 6, False, 7),
    (0, 6, True, 5),
    (1, 21, True, 20),
    (2, 11, True, 10),
])
def test_basis_size(degree, n_knots, periodic, size):
    assert SplineBasis(degree, n_knots, periodic).size == size


def test_linear_hat_values():
    basis = SplineBasis(1, 3)
    np.testing.assert_allclose(basis.design([0.0])[0], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(basis.design([0.25])[0], [0.5, 0.5, 0.0])
    np.testing.assert_allclose(basis.design([1.0])[0], [0.0, 0.0, 1.0])


def test_out_of_domain():
    basis = SplineBasis(1, 3)
    with pytest.raises(OutOfDomainError):
        basis.design([1.2])


@given(st.floats(min_value=0.0, max_value=1.0),
       st.sampled_from([0, 1, 2]),
       st.sampled_from([4, 7, 11]),
       st.booleans())
def test_partition_of_unity(t, degree, n_knots, periodic):
    basis = SplineBasis(degree, n_knots, periodic)
    vals = basis.design([t])[0]
    assert np.all(vals >= -1e-14)
    assert abs(vals.sum() - 1.0) < 1e-12


@pytest.mark.parametrize("degree,periodic", [(0, False), (1, False), (2, False),
                                             (1, True), (2, True)])
def test_local_support(degree, periodic):
    n_knots = 9
    basis = SplineBasis(degree, n_knots, periodic)
    h = basis.h
    ts = np.linspace(0, 1, 901)
    D = basis.design(ts)
    for m in range(basis.size):
        support = ts[D[:, m] > 1e-12]
        if support.size == 0:
            continue
        if periodic:
            continue  # wrapped support is checked via width below
        width = support.max() - support.min()
        assert width <= (degree + 1) * h + 1e-9


def test_antiderivative_matches_riemann():
    basis = SplineBasis(2, 7)
    ts = np.linspace(0.0, 1.0, 2001)
    D = basis.design(ts)
    riemann = np.cumsum(0.5 * (D[1:] + D[:-1]) * np.diff(ts)[:, None], axis=0)
    anti = basis.design_antiderivative(ts[1:])
    np.testing.assert_allclose(anti, riemann, atol=5e-7)


def test_hat_gram_closed_form():
    # hats on knots {0, 1/2, 1}: diag (h/3, 2h/3, h/3), off-diag h/6
    basis = SplineBasis(1, 3)
    expected = np.array([
        [1 / 6, 1 / 12, 0.0],
        [1 / 12, 1 / 3, 1 / 12],
        [0.0, 1 / 12, 1 / 6],
    ])
    np.testing.assert_allclose(basis.gram, expected, atol=1e-14)


def test_gram_is_spd():
    for periodic in (False, True):
        basis = SplineBasis(2, 8, periodic)
        G = basis.gram
        np.testing.assert_allclose(G, G.T, atol=1e-15)
        eigs = np.linalg.eigvalsh(G)
        assert eigs.min() > 0


def test_integrals_sum_to_one():
    for degree in (0, 1, 2):
        for periodic in (False, True):
            basis = SplineBasis(degree, 8, periodic)
            assert abs(basis.integrals().sum() - 1.0) < 1e-13


def test_derivative_of_linear_spline():
    basis = SplineBasis(1, 5)
    coef = np.array([[0.0], [1.0], [0.5], [2.0], [2.0]])
    f = SplineFunction(basis, coef)
    g = f.derivative()
    ts = np.array([0.1, 0.3, 0.6, 0.9])
    eps = 1e-7
    fd = (f(ts + eps) - f(ts - eps)) / (2 * eps)
    np.testing.assert_allclose(g(ts), fd, atol=1e-6)


def test_derivative_of_periodic_spline_is_periodic():
    basis = SplineBasis(2, 9, periodic=True)
    coef = np.sin(2 * np.pi * np.arange(basis.size) / basis.size)[:, None]
    f = SplineFunction(basis, coef)
    g = f.derivative()
    np.testing.assert_allclose(g([0.0]), g([1.0]), atol=1e-12)
    ts = np.array([0.2, 0.5, 0.8])
    eps = 1e-7
    fd = (f(ts + eps) - f(ts - eps)) / (2 * eps)
    np.testing.assert_allclose(g(ts), fd, atol=1e-5)


def test_spline_norm_sq_matches_quadrature():
    basis = SplineBasis(1, 2)
    f = SplineFunction(basis, np.array([[1.0, 1.0], [1.0, 3.0]]))  # (1, 2t+1)
    assert abs(f.norm_sq() - 16.0 / 3.0) < 1e-13


def test_spline_arithmetic():
    basis = SplineBasis(1, 4)
    f = SplineFunction(basis, np.arange(8, dtype=float).reshape(4, 2))
    g = 2.0 * f - f
    np.testing.assert_allclose(g.coef, f.coef)
