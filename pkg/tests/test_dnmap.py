import warnings

import numpy as np
import pytest

from fraclab.dnmap import (
    BoundaryBasis,
    DnMatrix,
    ResolutionWarning,
    dn_apply,
    dn_linearized_apply,
    dn_matrix,
    frechet_experiment,
    weighted_operator_norm,
)
from fraclab.eigenbasis import (
    BoxDomain,
    SpectralField,
    boundary_pairing,
    neumann_trace,
    sample_boundary,
)
from fraclab.solvers import Potential


def _bump(d, amplitude=1.0):
    return Potential.from_callable(
        d, lambda *x: amplitude * np.exp(-4 * sum((xi - 1.5) ** 2 for xi in x)))


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        yield


def test_basis_size_and_weights():
    d = BoxDomain.cube(2, 6)
    B = BoundaryBasis.for_domain(d)
    assert len(B) == 4 * (1 + 6)
    w = B.weights(1.0)
    assert w[0] == 1.0
    assert w[1] == pytest.approx(np.sqrt(2.0))


def test_projection_inverts_synthesis():
    d = BoxDomain.cube(2, 8)
    B = BoundaryBasis.for_domain(d)
    rng = np.random.default_rng(3)
    c = rng.standard_normal(len(B))
    assert np.allclose(B.project(B.synthesize(c)), c, atol=1e-12)


def test_projection_of_neumann_trace_is_modal():
    d = BoxDomain.cube(2, 8)
    B = BoundaryBasis.for_domain(d)
    tr = neumann_trace(SpectralField.unit(d, (3, 2)))
    coeffs = B.project(tr)
    assert np.allclose(B.project(B.synthesize(coeffs)), coeffs, atol=1e-12)


def test_zero_potential_gives_zero_map():
    d = BoxDomain.cube(2, 8)
    q = Potential.from_callable(d, lambda x, y: 0 * x)
    g = sample_boundary(d, lambda x, y: np.exp(x) * np.cos(y))
    assert dn_apply(q, 0.75, g).max_abs() == 0.0
    assert dn_linearized_apply(q, 0.75, g).max_abs() == 0.0


def test_linearized_pairing_is_symmetric():
    # <h, dL[q] g> = -int q u_h u_g is symmetric in (g, h)
    # face constants have corner singularities, so this needs some resolution
    d = BoxDomain.cube(2, 16)
    q = _bump(d)
    B = BoundaryBasis.for_domain(d)
    elems = [B.element(i) for i in (0, 1, 2, 17, 18, 35, 53)]
    images = [dn_linearized_apply(q, 0.75, e) for e in elems]
    G = np.array([[boundary_pairing(a, b).real for b in images] for a in elems])
    assert np.max(np.abs(G - G.T)) < 1e-5 * np.max(np.abs(G))


def test_matrix_columns_are_projected_images():
    d = BoxDomain.cube(2, 8)
    q = _bump(d)
    M = dn_matrix("linearized", q, 0.75)
    j = 5
    image = dn_linearized_apply(q, 0.75, M.basis.element(j))
    assert np.allclose(M.entries[:, j], M.basis.project(image), atol=1e-14)


def test_one_dimensional_matrix():
    d = BoxDomain.cube(1, 64)
    M = dn_matrix("linearized", _bump(d), 0.75)
    assert M.entries.shape == (2, 2)
    assert M.entries[0, 1] == pytest.approx(M.entries[1, 0], rel=1e-6)


def test_linearization_is_linear_in_potential():
    d = BoxDomain.cube(2, 8)
    q = _bump(d)
    g = sample_boundary(d, lambda x, y: x + y)
    a = dn_linearized_apply(q * 2.0, 0.75, g)
    b = dn_linearized_apply(q, 0.75, g)
    assert np.allclose(a.values[0], 2 * b.values[0], atol=1e-12)


def test_weighted_norm():
    d = BoxDomain.cube(2, 4)
    B = BoundaryBasis.for_domain(d)
    M = DnMatrix(np.eye(len(B)), B, 0.0, 0.0)
    assert weighted_operator_norm(M) == pytest.approx(1.0)
    assert weighted_operator_norm(M.reweighted(0.0, -1.0)) == pytest.approx(1.0)
    assert weighted_operator_norm(DnMatrix(np.zeros((len(B),) * 2), B, 0, 0)) == 0.0


def test_unknown_operator():
    d = BoxDomain.cube(2, 4)
    with pytest.raises(ValueError):
        dn_matrix("other", _bump(d), 0.75)


def test_frechet_gap_is_quadratic_small_case():
    d = BoxDomain.cube(2, 12)
    res = frechet_experiment(_bump(d), 0.75, [1e-2, 3e-2, 1e-1])
    assert abs(res.slope - 2.0) < 0.1
    assert np.all(np.diff(res.ratios) < 0.5 * res.ratios[0])


def test_frechet_refuses_large_potentials():
    d = BoxDomain.cube(2, 4)
    with pytest.raises(ValueError):
        frechet_experiment(_bump(d), 0.75, [10.0])
