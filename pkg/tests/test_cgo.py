import numpy as np
import pytest

from fraclab import cgo
from fraclab.fd import UniformGrid


@pytest.fixture(scope="module")
def plane():
    return UniformGrid((-3.0, -3.0), (3.0, 3.0), (161, 161))


def test_phase_validation():
    with pytest.raises(ValueError):
        cgo.LinearPhase((1, 0), (1, 0))
    with pytest.raises(ValueError):
        cgo.LinearPhase((2, 0), (0, 1))
    with pytest.raises(ValueError):
        cgo.LinearPhase((1, 0), (0, 1), sign=0)
    with pytest.raises(ValueError):
        cgo.LinearPhase((1, 0), (0, 1), h=0.0)


def test_phase_gradient_is_null_and_frame_orthonormal():
    p = cgo.LinearPhase((0, 0.6, 0.8), (1, 0, 0), -1)
    g = p.gradient
    assert abs(g @ g) < 1e-14
    R = p.frame()
    assert np.allclose(R @ R.T, np.eye(3))
    assert np.allclose(R[:2], [[0, 0.6, 0.8], [1, 0, 0]])


def test_holomorphic_seed_is_annihilated(plane):
    a = cgo.seed_holomorphic(plane, 1.0)
    Ta = cgo.transport_apply(a, plane)
    inner = (slice(4, -4), slice(4, -4))
    assert np.max(np.abs(Ta[inner])) < 1e-4 * np.max(np.abs(a))


def test_transport_solve_inverts_transport(plane):
    Y = plane.mesh()
    f = np.exp(-4 * (Y[0] ** 2 + Y[1] ** 2)) * (1 + 1j * Y[0])
    a = cgo.transport_solve(f, plane)
    inner = (slice(6, -6), slice(6, -6))
    err = cgo.transport_apply(a, plane) - f
    assert np.linalg.norm(err[inner]) < 1e-4 * np.linalg.norm(f[inner])


def test_transport_solve_rejects_unwindowed_data(plane):
    with pytest.raises(ValueError):
        cgo.transport_solve(np.ones(plane.shape), plane)
    with pytest.raises(ValueError):
        cgo.transport_solve(np.zeros(plane.shape), plane, order=3)


def test_bad_seed_raises(plane):
    phase = cgo.LinearPhase((1, 0), (0, 1))
    Y = plane.mesh()
    with pytest.raises(ValueError):
        cgo.build_amplitudes("harmonic", phase, 2, Y[0] - 1j * Y[1], plane)


def test_commutator_defect_small(plane):
    Y = plane.mesh()
    f = np.exp(-(Y[0] ** 2 + Y[1] ** 2)) * np.cos(Y[0])
    assert cgo.commutator_defect(f, plane) < 1e-3


def test_unresolved_h_raises(plane):
    phase = cgo.LinearPhase((1, 0), (0, 1))
    with pytest.raises(ValueError):
        cgo.conjugated_laplacian(np.ones(plane.shape), plane, phase, 1e-3)


def test_harmonic_residual_is_first_order():
    grid = UniformGrid((-3.0, -3.0, -1.5), (3.0, 3.0, 1.5), (161, 161, 9))
    phase = cgo.LinearPhase((1, 0, 0), (0, 1, 0))
    amps = cgo.build_amplitudes("harmonic", phase, 2, cgo.seed_holomorphic(grid), grid)
    assert max(amps.recursion_residuals) < 1e-6
    table = cgo.conjugated_residual(amps, [0.4, 0.2])
    assert table.slope == pytest.approx(1.0, abs=0.15)
    assert max(r.mismatch for r in table.rows) < 1e-2
