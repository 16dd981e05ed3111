import numpy as np
import pytest

from fraclab import gauge
from fraclab.fd import UniformGrid


@pytest.fixture(scope="module")
def square():
    grid = UniformGrid((0.0, 0.0), (np.pi, np.pi), (121, 121))
    w = gauge.flat_bump(grid, core=lambda x, y: 1 + 0.3 * np.sin(x) * np.cos(y))
    return grid, w


def test_zero_w_gives_zero_gauge(square):
    grid, _ = square
    theta = gauge.gauge_from_w(np.zeros(grid.shape), grid)
    for part in (theta.second, theta.first, theta.zeroth):
        assert not np.any(part)


def test_constant_test_function_gives_laplacian(square):
    grid, w = square
    theta = gauge.gauge_from_w(w, grid)
    u = np.ones(grid.shape)
    assert np.allclose(gauge._apply_coefficients(theta, u), theta.zeroth)


def test_product_rule_for_linear_product(square):
    grid, w = square
    theta = gauge.gauge_from_w(w, grid)
    x, y = grid.mesh()
    res = gauge.product_rule_residual(theta, x * y)
    assert np.max(np.abs(res)) <= 1e-6 * np.max(np.abs(theta.zeroth))


def test_flat_bump_flatness(square):
    grid, w = square
    assert gauge.flatness_order(w) >= 6
    assert gauge.layer_defect(w, 0) < 1e-12


@pytest.mark.parametrize("v", [
    lambda x, y: np.ones_like(x),
    lambda x, y: np.exp(x) * np.cos(y),
])
def test_identity_vanishes_for_harmonic_tests(square, v):
    grid, w = square
    theta = gauge.gauge_from_w(w, grid)
    x, y = grid.mesh()
    u = x ** 4 - 3 * x ** 2 * y ** 2
    val = gauge.integral_identity_eval(theta, u, v(x, y))
    scale = grid.integrate(np.abs(w)) * gauge.c2_norm(u, grid)
    assert abs(val) <= 1e-5 * scale


def test_identity_for_quadratic_test_function(square):
    # Laplacian of |x|^2 is 4, so the pairing is 4 times the integral of w u
    grid, w = square
    theta = gauge.gauge_from_w(w, grid)
    x, y = grid.mesh()
    u = 1 + x - y ** 2
    val = gauge.integral_identity_eval(theta, u, x ** 2 + y ** 2)
    ref = 4 * grid.integrate(w * u)
    assert abs(val - ref) <= 1e-5 * abs(ref)


def test_non_flat_w_rejected(square):
    grid, _ = square
    x, y = grid.mesh()
    with pytest.raises(gauge.FlatnessError):
        gauge.gauge_from_w(np.sin(x) * np.sin(y), grid)


def test_coefficients_must_be_symmetric(square):
    grid, _ = square
    second = np.zeros((2, 2) + grid.shape)
    second[0, 1] = 1.0
    with pytest.raises(ValueError):
        gauge.GaugeCoefficients(grid, second, np.zeros((2,) + grid.shape), np.zeros(grid.shape), 1)


@pytest.fixture(scope="module")
def centered():
    return UniformGrid((-2.0, -2.0), (2.0, 2.0), (201, 201))


def test_psi_of_zero(centered):
    dec = gauge.psi_from_theta(np.zeros((2, 2) + centered.shape), centered)
    assert np.max(np.abs(dec.psi)) == 0.0
    assert dec.residual == 0.0


def test_pure_multiple_of_identity_gives_zero_psi(centered):
    w, _, _ = gauge.radial_bump(centered, (0.3, -0.2), 0.8)
    dec = gauge.psi_from_theta(w * np.eye(2)[:, :, None, None], centered)
    assert np.max(np.abs(dec.psi)) < 1e-12
    assert dec.residual <= 1e-6
    assert np.allclose(dec.w, w)


def test_manufactured_decomposition(centered):
    psi, _, hess = gauge.radial_bump(centered, (0.2, 1.0), 0.7)
    w, _, _ = gauge.radial_bump(centered, (-0.3, -0.9), 0.7)
    dec = gauge.psi_from_theta(hess + w * np.eye(2)[:, :, None, None], centered)
    assert dec.residual <= 1e-4
    assert np.max(np.abs(dec.psi - psi)) <= 1e-3 * np.max(np.abs(psi))
    assert dec.symmetry_defect < 1e-6


def test_manufactured_decomposition_3d():
    # coarse grid: the residual is dominated by differencing the recovered psi
    grid = UniformGrid((-2.0,) * 3, (2.0,) * 3, (31, 31, 31))
    psi, _, hess = gauge.radial_bump(grid, (0.2, 1.1, 0.7), 0.9)
    w, _, _ = gauge.radial_bump(grid, (-0.3, -0.4, 0.2), 0.9)
    dec = gauge.psi_from_theta(hess + w * np.eye(3)[:, :, None, None, None], grid)
    assert np.max(np.abs(dec.psi - psi)) <= 5e-3 * np.max(np.abs(psi))
    assert dec.residual <= 0.2


def test_psi_needs_axis_in_grid(square):
    grid, _ = square
    shifted = UniformGrid((0.0, 0.5), (1.0, 1.5), (11, 11))
    with pytest.raises(ValueError):
        gauge.psi_from_theta(np.zeros((2, 2) + shifted.shape), shifted)


def test_phase_validation():
    with pytest.raises(ValueError):
        gauge.QuadraticPhase(((1.0, 1.0), (1.0, 1.0)))
    with pytest.raises(ValueError):
        gauge.QuadraticPhase(((1.0, 2.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        gauge.QuadraticPhase(((1.0, 0.0), (0.0, 1.0)), h=0.0)
    p = gauge.QuadraticPhase(((0.0, 4.0), (4.0, 0.0)), 0.1)
    assert p.signature == 0
    assert p.det == pytest.approx(-16.0)


def test_remainder_constant():
    assert gauge.remainder_constant() == pytest.approx(0.216444220178714, rel=1e-12)


@pytest.mark.parametrize("A", [((1.0, 0.0), (0.0, 1.0)), ((0.0, 4.0), (4.0, 0.0))])
def test_quadrature_matches_gaussian(A):
    phase = gauge.QuadraticPhase(A, 0.1)
    f = lambda x, y: np.exp(-(x ** 2 + y ** 2) / 0.5)  # noqa: E731
    ref = gauge.gaussian_reference(phase, 0.5)
    assert abs(gauge.oscillatory_quadrature(f, phase, 4.0) - ref) <= 1e-10 * abs(ref)


@pytest.fixture(scope="module")
def sp_grid():
    grid = UniformGrid((-4.0, -4.0), (4.0, 4.0), (257, 257))
    x, y = grid.mesh()
    return grid, np.exp(-(x ** 2 + y ** 2) / 0.5)


def test_expansion_error_below_bound_and_improves_with_order(sp_grid):
    grid, amp = sp_grid
    phase = gauge.QuadraticPhase(((1.0, 0.0), (0.0, 1.0)), 0.05)
    ref = gauge.gaussian_reference(phase, 0.5)
    errs = []
    for N in (1, 3):
        val, bound = gauge.stationary_phase_expand(amp, grid, phase, N)
        errs.append(abs(val - ref))
        assert errs[-1] <= bound
    assert errs[1] < errs[0]


def test_expansion_error_slope(sp_grid):
    grid, amp = sp_grid
    hs = np.array([0.1, 0.05, 0.02])
    for N in (1, 2):
        errs = []
        for h in hs:
            phase = gauge.QuadraticPhase(((1.0, 0.0), (0.0, 1.0)), h)
            val, _ = gauge.stationary_phase_expand(amp, grid, phase, N)
            errs.append(abs(val - gauge.gaussian_reference(phase, 0.5)))
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert slope >= N + 1 - 0.2


def test_vanishing_jet_amplitude(sp_grid):
    grid, _ = sp_grid
    x, y = grid.mesh()
    amp = x * y * np.exp(-(x ** 2 + y ** 2))
    phase = gauge.QuadraticPhase(((1.0, 0.0), (0.0, 1.0)), 0.1)
    val, _ = gauge.stationary_phase_expand(amp, grid, phase, 2)
    assert abs(val) < 1e-12
    f = lambda s, t: s * t * np.exp(-(s ** 2 + t ** 2))  # noqa: E731
    assert abs(gauge.oscillatory_quadrature(f, phase, 4.0)) < 1e-10


def test_origin_must_be_a_node():
    grid = UniformGrid((-1.0, -1.0), (2.0, 2.0), (9, 9))
    phase = gauge.QuadraticPhase(((1.0, 0.0), (0.0, 1.0)), 0.1)
    with pytest.raises(ValueError):
        gauge.stationary_phase_expand(np.zeros(grid.shape), grid, phase, 1)


def test_trace_relations(square):
    grid, w = square
    zero = gauge.GaugeCoefficients.zeros(grid)
    assert gauge.trace_relations_check(zero).residuals == (0.0,) * 4
    assert gauge.trace_relations_check(gauge.gauge_from_w(w, grid)).passed
    second = np.zeros((2, 2) + grid.shape)
    second[0, 0] = w
    second[1, 1] = -w
    bad = gauge.GaugeCoefficients(grid, second, np.zeros((2,) + grid.shape),
                                  np.zeros(grid.shape), 1)
    assert not gauge.trace_relations_check(bad).passed


def test_trace_relations_need_two_dimensions():
    grid = UniformGrid((0.0,) * 3, (1.0,) * 3, (8, 8, 8))
    with pytest.raises(ValueError):
        gauge.trace_relations_check(gauge.GaugeCoefficients.zeros(grid))
