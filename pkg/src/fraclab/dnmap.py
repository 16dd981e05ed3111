"""DN-type boundary maps, their Born linearization and matrix representations."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .eigenbasis import (
    BoundaryField,
    GridField,
    SpectralField,
    analyze,
    neumann_trace,
    normal_derivative_factor,
    sine_matrix,
)
from .fracops import solve_fractional_dirichlet
from .solvers import (
    DirectSolver,
    Potential,
    check_inverse_order,
    green_apply,
    harmonic_extension,
)

# Relative size of the outermost mode shell above which boundary sums are
# considered under-resolved.
TAIL_TOL = 1e-2

# Refuse to assemble boundary bases larger than this.
MAX_BASIS = 4096


class ResolutionWarning(UserWarning):
    """The truncated mode series may not resolve a boundary quantity."""


def _tail_ratio(coeffs, weights):
    """Share of the weighted coefficient mass carried by the outermost mode shell."""
    mags = np.abs(coeffs) * weights
    total = np.linalg.norm(mags)
    if total == 0:
        return 0.0
    shell = np.zeros(coeffs.shape, dtype=bool)
    for ax, N in enumerate(coeffs.shape):
        idx = [slice(None)] * coeffs.ndim
        idx[ax] = N - 1
        shell[tuple(idx)] = True
    return float(np.linalg.norm(mags[shell]) / total)


def neumann_of_w(v, s, tail_tol=TAIL_TOL):
    """Neumann trace of ``w`` solving ``(-Delta_{D,0})^{1-s} w = v``."""
    w = solve_fractional_dirichlet(v, s)
    d = v.domain
    freq = np.sqrt(d.eigenvalues)
    ratio = _tail_ratio(w.coeffs, freq)
    if ratio > tail_tol:
        warnings.warn(f"Neumann trace series tail carries {ratio:.2e} of its mass; "
                      "increase the truncation", ResolutionWarning, stacklevel=2)
    return neumann_trace(w)


def dn_apply(q, s, g, solver=None):
    """Fractional DN map: Neumann trace of ``w`` built from the full correction."""
    check_inverse_order(s)
    if q.sup_bound == 0.0:
        return neumann_trace(SpectralField.zeros(q.domain))
    solver = solver or DirectSolver(q, s)
    return neumann_of_w(solver.solve(g).correction, s)


def born_correction(q, s, g):
    """One-term Born correction ``G^s (q P g)``."""
    base = harmonic_extension(g)
    return green_apply(analyze(GridField(q.domain, q.q.values * base.interior.values)), s)


def dn_linearized_apply(q, s, g):
    """Linearized DN map: Neumann trace of ``w`` built from the Born correction."""
    check_inverse_order(s)
    return neumann_of_w(born_correction(q, s, g), s)


# ---------------------------------------------------------------------------
# boundary basis and matrices


@dataclass(frozen=True)
class BoundaryBasis:
    """Per-face constants plus tangential sine products, face by face.

    ``labels[i]`` is ``(face, m)`` with ``m`` the tangential multi-index
    (all zeros for the face constant).
    """

    domain: object
    labels: tuple

    @classmethod
    def for_domain(cls, domain):
        labels = []
        for face in domain.faces:
            tang = domain.tangential_axes(face)
            labels.append((face, (0,) * len(tang)))
            if not tang:
                continue
            for m in itertools.product(*[range(1, domain.modes[i] + 1) for i in tang]):
                labels.append((face, tuple(m)))
        if len(labels) > MAX_BASIS:
            raise ValueError(f"boundary basis of size {len(labels)} exceeds {MAX_BASIS}")
        return cls(domain, tuple(labels))

    def __len__(self):
        return len(self.labels)

    def frequencies(self):
        return np.array([np.sqrt(np.sum(np.square(m))) for _, m in self.labels])

    def weights(self, sigma):
        """Sobolev weights ``(1 + |m|^2)^{sigma/2}`` per basis slot."""
        return (1.0 + self.frequencies() ** 2) ** (sigma / 2.0)

    def element(self, i):
        """Samples of basis function ``i`` as a boundary field."""
        d = self.domain
        face, m = self.labels[i]
        vals = [np.zeros(d.face_shape(f)) for f in d.faces]
        idx = d.faces.index(face)
        tang = d.tangential_axes(face)
        if all(mm == 0 for mm in m):
            vals[idx] = np.full(d.face_shape(face), 1.0 / np.sqrt(d.face_measure(face)))
        else:
            prof = np.ones(())
            for i, mm in zip(tang, m):
                S = sine_matrix(d.lengths[i], mm, d.closed_nodes(i))[:, -1]
                prof = np.multiply.outer(prof, S)
            vals[idx] = prof
        return BoundaryField(d, tuple(vals))

    def synthesize(self, coeffs):
        """Boundary field ``sum_i coeffs[i] b_i``."""
        coeffs = np.asarray(coeffs)
        out = None
        for i, c in enumerate(coeffs):
            if c == 0:
                continue
            term = self.element(i) * c
            out = term if out is None else out + term
        return BoundaryField.zeros(self.domain) if out is None else out

    def project(self, bf):
        """Coefficients of a boundary field in this basis.

        Neumann traces of sine series are tangential sine series on every
        face, so their coefficients are read off exactly. Other fields are
        projected by collocation: the constant from the face rim (where the
        sines vanish) and the sines by discrete orthogonality on the interior
        face nodes. Both routes are exact on the span of the basis.
        """
        d = self.domain
        dtype = np.result_type(*[v.dtype for v in bf.values], float)
        out = np.zeros(len(self), dtype=dtype)
        pos = 0
        for face, vals in zip(d.faces, bf.values):
            tang = d.tangential_axes(face)
            if not tang:
                out[pos] = vals[()]
                pos += 1
                continue
            count = 1 + int(np.prod([d.modes[i] for i in tang]))
            if bf.neumann is not None:
                a, side = face
                fac = normal_derivative_factor(d, a, side)
                sines = np.tensordot(fac, bf.neumann, axes=([0], [a]))
                out[pos + 1:pos + count] = np.ravel(sines)
            else:
                out[pos:pos + count] = self._collocation_project(face, vals)
            pos += count
        return out

    def _collocation_project(self, face, vals):
        """Exact on the span: constant from the face rim, sines by discrete orthogonality."""
        d = self.domain
        tang = d.tangential_axes(face)
        rim = np.ones(vals.shape, dtype=bool)
        rim[tuple(slice(1, -1) for _ in tang)] = False
        scale = 1.0 / np.sqrt(d.face_measure(face))
        const = np.mean(vals[rim]) / scale
        inner = vals[tuple(slice(1, -1) for _ in tang)] - const * scale
        for j, i in enumerate(tang):
            S = sine_matrix(d.lengths[i], d.modes[i], d.axis_nodes(i)) * d.spacing[i]
            inner = np.moveaxis(np.tensordot(S.T, inner, axes=([1], [j])), 0, j)
        return np.concatenate([[const], np.ravel(inner)])


@dataclass(frozen=True, eq=False)
class DnMatrix:
    """Matrix of a boundary operator in a ``BoundaryBasis`` with Sobolev weightings."""

    entries: np.ndarray
    basis: BoundaryBasis
    sigma_in: float
    sigma_out: float

    def __sub__(self, other):
        return DnMatrix(self.entries - other.entries, self.basis, self.sigma_in, self.sigma_out)

    def __add__(self, other):
        return DnMatrix(self.entries + other.entries, self.basis, self.sigma_in, self.sigma_out)

    def apply(self, coeffs):
        return self.entries @ np.asarray(coeffs)

    def reweighted(self, sigma_in, sigma_out):
        return DnMatrix(self.entries, self.basis, sigma_in, sigma_out)


def dn_matrix(op, q, s, sigma_in=0.5, sigma_out=-0.5, basis=None):
    """Column-by-column matrix of ``op`` ("full" or "linearized") in the boundary basis."""
    check_inverse_order(s)
    basis = basis or BoundaryBasis.for_domain(q.domain)
    if op in ("full", dn_apply):
        if q.sup_bound == 0.0:
            apply = lambda g: dn_apply(q, s, g)  # noqa: E731
        else:
            solver = DirectSolver(q, s)
            apply = lambda g: dn_apply(q, s, g, solver=solver)  # noqa: E731
    elif op in ("linearized", dn_linearized_apply):
        apply = lambda g: dn_linearized_apply(q, s, g)  # noqa: E731
    else:
        raise ValueError(f"unknown operator {op!r}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ResolutionWarning)
        cols = [basis.project(apply(basis.element(i))) for i in range(len(basis))]
    flagged = [w for w in caught if issubclass(w.category, ResolutionWarning)]
    for w in caught:
        if not issubclass(w.category, ResolutionWarning):
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    if flagged:
        warnings.warn(f"{len(flagged)} of {len(basis)} basis columns have under-resolved "
                      "Neumann trace series", ResolutionWarning, stacklevel=2)
    return DnMatrix(np.array(cols).T, basis, float(sigma_in), float(sigma_out))


def weighted_operator_norm(m):
    """Largest singular value of ``W_out M W_in^{-1}``."""
    w_in = m.basis.weights(m.sigma_in)
    w_out = m.basis.weights(m.sigma_out)
    scaled = (w_out[:, None] * m.entries) / w_in[None, :]
    if not np.any(scaled):
        return 0.0
    return float(np.linalg.norm(scaled, 2))


# ---------------------------------------------------------------------------
# Frechet experiment


@dataclass(frozen=True)
class FrechetResult:
    scales: np.ndarray
    sup_norms: np.ndarray
    gaps: np.ndarray
    slope: float
    ratios: np.ndarray


def frechet_experiment(q, s, scales, sigma_in=None, sigma_out=0.5):
    """Gap between the DN map and its linearization for scaled potentials.

    Returns sup norms, gap norms, the fitted log-log slope and the ratios
    ``gap / eps^2``.
    """
    s = check_inverse_order(s)
    sigma_in = s - 0.5 if sigma_in is None else sigma_in
    scales = np.asarray(scales, dtype=float)
    lam1 = float(np.min(q.domain.eigenvalues))
    limit = 0.5 * lam1 ** s
    basis = BoundaryBasis.for_domain(q.domain)
    lin = dn_matrix("linearized", q, s, sigma_in, sigma_out, basis)
    sups, gaps = [], []
    for eps in scales:
        qe = q * eps
        if qe.sup_bound > limit:
            raise ValueError(f"scaled potential sup norm {qe.sup_bound:.3g} exceeds "
                             f"the smallness limit {limit:.3g}")
        sups.append(qe.sup_bound)
        if eps == 0:
            gaps.append(0.0)
            continue
        full = dn_matrix("full", qe, s, sigma_in, sigma_out, basis)
        # the linearization is linear in q, so scale once
        diff = DnMatrix(full.entries - eps * lin.entries, basis, sigma_in, sigma_out)
        gaps.append(weighted_operator_norm(diff))
    sups = np.array(sups)
    gaps = np.array(gaps)
    pos = (scales > 0) & (gaps > 0)
    slope = float(np.polyfit(np.log(scales[pos]), np.log(gaps[pos]), 1)[0]) if pos.sum() >= 2 else float("nan")
    ratios = np.where(scales > 0, gaps / np.where(scales > 0, scales, 1.0) ** 2, 0.0)
    return FrechetResult(scales, sups, gaps, slope, ratios)
