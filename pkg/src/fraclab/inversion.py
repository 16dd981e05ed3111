"""Fourier sampling of the potential from boundary data, reconstruction and stability."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .eigenbasis import (
    BoundaryField,
    GridField,
    boundary_pairing,
    sample_boundary,
)
from .dnmap import dn_linearized_apply, dn_matrix, weighted_operator_norm
from .solvers import check_inverse_order


@dataclass(frozen=True)
class ExponentialPair:
    """Harmonic exponentials whose product is the plane wave ``exp(-i xi.(x - x0))``."""

    xi: np.ndarray
    eta: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    center: np.ndarray

    def h(self, *coords):
        return np.exp(sum(a * (c - x0) for a, c, x0 in zip(self.alpha, coords, self.center)))

    def g(self, *coords):
        return np.exp(sum(b * (c - x0) for b, c, x0 in zip(self.beta, coords, self.center)))

    def traces(self, domain):
        """Boundary samples ``(g, h)``."""
        return sample_boundary(domain, self.g), sample_boundary(domain, self.h)


def orthogonal_direction(xi):
    """First standard basis vector not parallel to ``xi``, made orthogonal and scaled to ``|xi|``."""
    xi = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(xi)
    for e in np.eye(len(xi)):
        v = e - (e @ xi) / norm ** 2 * xi
        if np.linalg.norm(v) > 1e-8:
            return v / np.linalg.norm(v) * norm
    raise ValueError("no orthogonal direction exists in one dimension")


def make_exponential_pair(xi, center=None):
    """Exponentials ``exp(alpha.x)``, ``exp(beta.x)`` with ``alpha + beta = -i xi``."""
    xi = np.asarray(xi, dtype=float)
    if not np.any(xi):
        raise ValueError("xi = 0 has no exponential pair; fourier_sample uses constant data")
    eta = orthogonal_direction(xi)
    alpha = 0.5 * (eta - 1j * xi)
    beta = 0.5 * (-eta - 1j * xi)
    center = np.zeros(len(xi)) if center is None else np.asarray(center, dtype=float)
    return ExponentialPair(xi, eta, alpha, beta, center)


def fourier_sample(dn, xi, domain, center=None):
    """Estimate of ``int_Omega q exp(-i xi.x)`` from a linearized DN map ``dn(g)``."""
    xi = np.asarray(xi, dtype=float)
    if not np.any(xi):
        one = sample_boundary(domain, lambda *x: np.ones_like(x[0]))
        return complex(-boundary_pairing(one, dn(one)))
    center = domain.center if center is None else center
    pair = make_exponential_pair(xi, center)
    g, h = pair.traces(domain)
    shift = np.exp(-1j * xi @ np.asarray(center))
    return complex(-shift * boundary_pairing(h, dn(g)))


def volume_fourier(q, xi):
    """Grid quadrature of ``int_Omega q exp(-i xi.x)``."""
    d = q.domain
    phase = sum(k * c for k, c in zip(xi, d.mesh()))
    return complex(np.sum(q.q.values * np.exp(-1j * phase)) * d.cell_volume)


def alessandrini_terms(q, s, xi):
    """Boundary pairing ``<h, dL[q] g>`` and the volume integral ``int q u_h u_g``."""
    check_inverse_order(s)
    d = q.domain
    xi = np.asarray(xi, dtype=float)
    if not np.any(xi):
        g = h = sample_boundary(d, lambda *x: np.ones_like(x[0]))
        prod = np.ones(d.grid)
    else:
        pair = make_exponential_pair(xi, d.center)
        g, h = pair.traces(d)
        mesh = d.mesh()
        prod = pair.h(*mesh) * pair.g(*mesh)
    lhs = boundary_pairing(h, dn_linearized_apply(q, s, g))
    rhs = np.sum(q.q.values * prod) * d.cell_volume
    return complex(lhs), complex(rhs)


def alessandrini_residual(q, s, xi, relative=False):
    """``|<h, dL[q] g> + int q u_h u_g|``, optionally relative to the volume integral."""
    lhs, rhs = alessandrini_terms(q, s, xi)
    res = abs(lhs + rhs)
    if relative:
        return res / abs(rhs) if rhs != 0 else (0.0 if res == 0 else np.inf)
    return res


# ---------------------------------------------------------------------------
# lattice reconstruction


@dataclass(frozen=True)
class Lattice:
    """Dual lattice of the periodization box ``prod [-pad_i, L_i + pad_i]``."""

    lengths: tuple
    pad: tuple

    @classmethod
    def for_domain(cls, domain, pad=None):
        pad = tuple(L / 2 for L in domain.lengths) if pad is None else tuple(
            np.broadcast_to(pad, (domain.n,)).tolist())
        return cls(tuple(domain.lengths), pad)

    @property
    def widths(self):
        return np.array(self.lengths) + 2 * np.array(self.pad)

    @property
    def volume(self):
        return float(np.prod(self.widths))

    @property
    def circumradius(self):
        return float(np.linalg.norm(self.widths) / 2)

    def points(self, rho):
        """Lattice frequencies with ``|xi| <= rho``."""
        steps = 2 * np.pi / self.widths
        ranges = [np.arange(-int(np.floor(rho / st)), int(np.floor(rho / st)) + 1) for st in steps]
        pts = np.array(list(itertools.product(*ranges)), dtype=float) * steps
        return pts[np.linalg.norm(pts, axis=1) <= rho + 1e-12]


@dataclass(frozen=True)
class Reconstruction:
    field: GridField
    frequencies: np.ndarray
    samples: np.ndarray


def reconstruct(dn, domain, lattice, rho, symmetric=False):
    """Truncated Fourier series of ``q`` from samples on the dual lattice.

    ``symmetric`` reuses ``conj(q^(xi))`` for ``-xi`` (valid for real ``q``).
    """
    if rho <= 0:
        raise ValueError("cutoff must be positive")
    if np.any(np.array(lattice.pad) < 0) or not np.allclose(lattice.lengths, domain.lengths):
        raise ValueError("the periodization box must contain the domain")
    pts = lattice.points(rho)
    samples = np.zeros(len(pts), dtype=complex)
    seen = {}
    for i, xi in enumerate(pts):
        key = tuple(np.round(-xi, 12))
        if symmetric and key in seen:
            samples[i] = np.conj(samples[seen[key]])
            continue
        samples[i] = fourier_sample(dn, xi, domain)
        seen[tuple(np.round(xi, 12))] = i
    mesh = domain.mesh()
    vals = np.zeros(domain.grid, dtype=complex)
    for xi, c in zip(pts, samples):
        vals += c * np.exp(1j * sum(k * x for k, x in zip(xi, mesh)))
    return Reconstruction(GridField(domain, vals.real / lattice.volume), pts, samples)


def reconstruct_from_potential(q, s, rho, pad=None, symmetric=False):
    """Reconstruction driven by the linearized DN map of ``q``."""
    lattice = Lattice.for_domain(q.domain, pad)
    return reconstruct(lambda g: dn_linearized_apply(q, s, g), q.domain, lattice, rho, symmetric)


def truncated_fourier_series(q, lattice, rho):
    """The best reconstruction available at cutoff ``rho`` (exact coefficients)."""
    d = q.domain
    mesh = d.mesh()
    vals = np.zeros(d.grid, dtype=complex)
    for xi in lattice.points(rho):
        vals += volume_fourier(q, xi) * np.exp(1j * sum(k * x for k, x in zip(xi, mesh)))
    return GridField(d, vals.real / lattice.volume)


def relative_l2_error(approx, exact):
    den = np.linalg.norm(exact.values)
    return float(np.linalg.norm(approx.values - exact.values) / den) if den else float(
        np.linalg.norm(approx.values))


# ---------------------------------------------------------------------------
# norms


def hminus1_norm_periodic(values, widths):
    """``H^{-1}`` norm of a periodic sample array on a box of the given widths."""
    values = np.asarray(values)
    widths = np.asarray(widths, dtype=float)
    shape = values.shape
    cell = np.prod(widths / np.array(shape))
    fhat = np.fft.fftn(values) * cell
    freqs = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(m, w / m) for m, w in zip(shape, widths)],
                        indexing="ij", sparse=True)
    k2 = sum(f ** 2 for f in freqs)
    return float(np.sqrt(np.sum(np.abs(fhat) ** 2 / (1.0 + k2)) / np.prod(widths)))


def hminus1_norm(f, pad=None):
    """``H^{-1}`` norm of ``chi_Omega f`` computed on a zero-padded periodic box.

    ``pad`` is the margin added on each side; by default half the domain
    width, so the periodic box is twice the domain along every axis.
    """
    d = f.domain
    pad = tuple(L / 2 for L in d.lengths) if pad is None else tuple(np.broadcast_to(pad, (d.n,)).tolist())
    cells = [int(round(p / h)) for p, h in zip(pad, d.spacing)]
    # closed grid of the domain minus one end node, plus padding on both sides
    shape = tuple(G + 1 + 2 * c for G, c in zip(d.grid, cells))
    arr = np.zeros(shape, dtype=np.result_type(f.values, float))
    arr[tuple(slice(c + 1, c + 1 + G) for c, G in zip(cells, d.grid))] = f.values
    widths = [h * m for h, m in zip(d.spacing, shape)]
    return hminus1_norm_periodic(arr, widths)


def l2_norm(f):
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.domain.cell_volume))


# ---------------------------------------------------------------------------
# stability


@dataclass(frozen=True)
class StabilityRecord:
    t: float
    err: float
    bound: float
    rho: float
    applicable: bool
    weighting: str
    l2_bounds: tuple
    sup_bounds: tuple


def stability_modulus(t, radius, constant=1.0):
    """Logarithmic modulus ``sqrt(C) (e^{|log t|} t^2 + 36 R^2 / |log t|^2)^{1/2}``."""
    if t <= 0:
        return 0.0
    L = abs(np.log(t))
    if L == 0:
        return np.inf
    return float(np.sqrt(constant) * np.sqrt(np.exp(L) * t ** 2 + 36 * radius ** 2 / L ** 2))


WEIGHTINGS = {"h12": (0.5, -0.5), "l2": (0.0, 0.0)}


def stability_experiment(q1, q2, s, weighting="h12", pad=None, matrices=None):
    """Operator-norm distance of linearized DN maps against the ``H^{-1}`` distance of potentials."""
    check_inverse_order(s)
    if q1.domain != q2.domain:
        raise ValueError("potentials live on different domains")
    d = q1.domain
    sig_in, sig_out = WEIGHTINGS[weighting]
    if matrices is None:
        m1 = dn_matrix("linearized", q1, s, sig_in, sig_out)
        m2 = dn_matrix("linearized", q2, s, sig_in, sig_out)
    else:
        m1, m2 = (m.reweighted(sig_in, sig_out) for m in matrices)
    t = weighted_operator_norm(m1 - m2)
    diff = GridField(d, q1.q.values - q2.q.values)
    err = hminus1_norm(diff, pad)
    lattice = Lattice.for_domain(d, pad)
    radius = lattice.circumradius
    l2s = (q1.l2_bound, q2.l2_bound)
    sups = (q1.sup_bound, q2.sup_bound)
    if t == 0.0:
        return StabilityRecord(0.0, err, float("nan"), float("inf"), False, weighting, l2s, sups)
    rho = abs(np.log(t)) / (6 * radius)
    bound = stability_modulus(t, radius)
    return StabilityRecord(t, err, bound, rho, bool(t < np.exp(-1)), weighting, l2s, sups)
