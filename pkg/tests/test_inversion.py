import warnings

import numpy as np
import pytest

from fraclab.dnmap import ResolutionWarning, dn_linearized_apply
from fraclab.eigenbasis import BoxDomain, GridField
from fraclab.experiments import band_limited
from fraclab.inversion import (
    Lattice,
    alessandrini_residual,
    fourier_sample,
    hminus1_norm,
    hminus1_norm_periodic,
    make_exponential_pair,
    orthogonal_direction,
    reconstruct,
    relative_l2_error,
    stability_modulus,
    truncated_fourier_series,
    volume_fourier,
)
from fraclab.solvers import Potential


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        yield


def _smooth_bump(x, y):
    r2 = ((x - 1.4) ** 2 + (y - 1.7) ** 2) / 1.2 ** 2
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.where(r2 < 1, np.exp(1 - 1 / (1 - r2)), 0.0)


@pytest.mark.parametrize("xi", [(1.0, 0.0), (2.0, -3.0), (0.0, 0.5)])
def test_exponential_pair_is_harmonic_and_multiplies_to_plane_wave(xi):
    p = make_exponential_pair(xi)
    assert np.allclose(p.alpha + p.beta, -1j * np.asarray(xi))
    assert abs(p.alpha @ p.alpha) < 1e-12
    assert abs(p.beta @ p.beta) < 1e-12
    assert orthogonal_direction(xi) @ np.asarray(xi) == pytest.approx(0.0, abs=1e-12)


def test_exponential_pair_needs_nonzero_frequency():
    with pytest.raises(ValueError):
        make_exponential_pair((0.0, 0.0))


def test_alessandrini_identity_small_grid():
    d = BoxDomain.cube(2, 32)
    q = Potential.from_callable(d, _smooth_bump)
    for xi in [(0, 0), (1, 0), (2, 2)]:
        assert alessandrini_residual(q, 0.75, xi, relative=True) < 1e-3


def test_fourier_sample_matches_volume_integral():
    d = BoxDomain.cube(2, 32)
    q = Potential.from_callable(d, _smooth_bump)
    dn = lambda g: dn_linearized_apply(q, 0.75, g)  # noqa: E731
    xi = np.array([1.0, 1.0])
    a = fourier_sample(dn, xi, d)
    b = volume_fourier(q, xi)
    assert abs(a - b) < 1e-3 * abs(b)


def test_lattice_points():
    d = BoxDomain.cube(2, 4)
    lat = Lattice.for_domain(d)
    assert np.allclose(lat.widths, 2 * np.pi)
    assert len(lat.points(1.5)) == 9
    assert lat.circumradius == pytest.approx(np.sqrt(2) * np.pi)


def test_band_limited_series_is_exact_without_padding():
    d = BoxDomain.cube(2, 32)
    q = Potential.from_callable(d, band_limited)
    approx = truncated_fourier_series(q, Lattice.for_domain(d, 0.0), 8.0)
    assert relative_l2_error(approx, q.q) < 1e-12


def test_reconstruction_of_band_limited_potential():
    d = BoxDomain.cube(2, 32)
    q = Potential.from_callable(d, band_limited)
    rec = reconstruct(lambda g: dn_linearized_apply(q, 0.75, g), d, Lattice.for_domain(d, 0.0),
                      8.0, symmetric=True)
    assert relative_l2_error(rec.field, q.q) < 1e-3


def test_reconstruction_arguments_checked():
    d = BoxDomain.cube(2, 4)
    with pytest.raises(ValueError):
        reconstruct(lambda g: g, d, Lattice.for_domain(d), 0.0)
    with pytest.raises(ValueError):
        reconstruct(lambda g: g, d, Lattice((1.0, 1.0), (0.0, 0.0)), 1.0)


def test_hminus1_norm_of_single_mode():
    # cos(x) on a period 2 pi: L2 norm squared pi, divided by 1 + 1
    x = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    assert hminus1_norm_periodic(np.cos(x), [2 * np.pi]) == pytest.approx(np.sqrt(np.pi / 2))


def test_hminus1_norm_bounded_by_l2():
    d = BoxDomain.cube(2, 16)
    f = GridField(d, _smooth_bump(*d.mesh()))
    l2 = np.sqrt(np.sum(f.values ** 2) * d.cell_volume)
    val = hminus1_norm(f)
    assert 0 < val < l2
    assert hminus1_norm(GridField(d, np.zeros(d.grid))) == 0.0


def test_stability_modulus_closed_form():
    t = np.exp(-2.0)
    R = 3.0
    assert stability_modulus(t, R) == pytest.approx(np.sqrt(np.exp(2) * t ** 2 + 36 * R ** 2 / 4))
    assert stability_modulus(0.0, R) == 0.0
    assert stability_modulus(1e-8, R) < stability_modulus(1e-4, R)
