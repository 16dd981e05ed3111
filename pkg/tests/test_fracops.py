import numpy as np
import pytest

from fraclab.eigenbasis import BoxDomain, SpectralField, sample_boundary
from fraclab.fracops import (
    InhomFunction,
    apply_homogeneous,
    check_order,
    ibp_residual,
    inhom_coefficients,
    noncommutation_boundary_form,
    noncommutation_gap,
    sobolev_norm,
    solve_fractional_dirichlet,
)
from fraclab.solvers import harmonic_extension


def test_order_validation():
    assert check_order(0.5) == 0.5
    for bad in (0.0, -0.1, 1.2):
        with pytest.raises(ValueError):
            check_order(bad)
    with pytest.raises(ValueError):
        check_order(1.0, closed_upper=False)


def test_homogeneous_operator_scales_modes():
    d = BoxDomain.cube(2, 6)
    v = apply_homogeneous(SpectralField.unit(d, (2, 3)), 0.75)
    assert v.coeffs[1, 2] == pytest.approx(13 ** 0.75)
    assert np.count_nonzero(v.coeffs) == 1


def test_solve_inverts_complementary_power():
    d = BoxDomain.cube(2, 6)
    rng = np.random.default_rng(0)
    v = SpectralField(d, rng.standard_normal(d.modes))
    w = solve_fractional_dirichlet(v, 0.7)
    assert np.allclose(apply_homogeneous(w, 0.3).coeffs, v.coeffs)


def test_sobolev_norm_of_mode():
    d = BoxDomain.cube(1, 8)
    assert sobolev_norm(SpectralField.unit(d, (3,)), 1.0) == pytest.approx(3.0)


@pytest.mark.parametrize("s", [0.55, 0.75, 0.95])
def test_constant_in_kernel(s):
    d = BoxDomain.cube(2, 64)
    one = InhomFunction.from_callable(d, lambda x, y: np.ones_like(x))
    assert np.max(np.abs(inhom_coefficients(one, s).coeffs)) < 1e-8


def test_linear_function_in_kernel_1d():
    d = BoxDomain.cube(1, 128)
    u = InhomFunction.from_callable(d, lambda x: 2 * x - 1)
    assert np.max(np.abs(inhom_coefficients(u, 0.6).coeffs)) < 1e-8


def test_zero_trace_matches_homogeneous_operator():
    d = BoxDomain.cube(2, 16)
    rng = np.random.default_rng(2)
    c = SpectralField(d, rng.standard_normal(d.modes) * d.eigenvalues ** -2)
    u = InhomFunction.from_spectral(c)
    assert np.allclose(inhom_coefficients(u, 0.8).coeffs, apply_homogeneous(c, 0.8).coeffs,
                       atol=1e-10)


def test_harmonic_trace_residual_decreases():
    f = lambda x, y: np.exp(x) * np.cos(y)  # noqa: E731
    res = []
    for N in (32, 64):
        d = BoxDomain.cube(2, N)
        u = harmonic_extension(sample_boundary(d, f))
        res.append(np.linalg.norm(inhom_coefficients(u, 0.75).coeffs))
    assert res[0] / res[1] > 4


def test_integration_by_parts_constant_and_mode():
    d = BoxDomain.cube(2, 64)
    u = InhomFunction.from_callable(d, lambda x, y: np.ones_like(x))
    assert ibp_residual(u, SpectralField.unit(d, (1, 1)), 0.75) < 1e-12


def test_integration_by_parts_linear_1d():
    d = BoxDomain.cube(1, 256)
    u = InhomFunction.from_callable(d, lambda x: x)
    assert ibp_residual(u, SpectralField.unit(d, (3,)), 0.6) < 1e-9


@pytest.mark.parametrize("s", [0.5, 0.7])
def test_noncommutation_gap_for_quadratic_1d(s):
    # u = x^2: Laplacian trace 2 pairs with d_nu phi_k, giving
    # gap_k = -k^(2s-2) 2 k sqrt(2/pi) (cos(k pi) - 1)
    d = BoxDomain.cube(1, 256)
    u = InhomFunction.from_callable(d, lambda x: x ** 2, lambda x: 2 + 0 * x)
    k = np.arange(1, 257)
    exact = -k ** (2 * s - 2) * 2 * k * np.sqrt(2 / np.pi) * (np.cos(k * np.pi) - 1)
    gap = noncommutation_gap(u, s).coeffs
    assert np.max(np.abs(gap - exact)) < 1e-9
    assert np.allclose(noncommutation_boundary_form(u, s).coeffs, gap, atol=1e-9)


def test_noncommutation_needs_laplacian_trace():
    d = BoxDomain.cube(1, 8)
    with pytest.raises(ValueError):
        noncommutation_gap(InhomFunction.from_callable(d, lambda x: x), 0.5)
