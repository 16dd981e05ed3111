"""Poisson extensions, the Green operator and Schrodinger-type solvers.

The correction ``v`` solves ``((-Delta_{D,0})^s - q) v = q P g`` where ``P g``
is the harmonic extension of the Dirichlet data. It is computed either by a
dense Galerkin solve in the sine basis or by the Born (Neumann) series.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, eigsh

from .eigenbasis import (
    GridField,
    SpectralField,
    analyze,
    closed_sine_coefficients,
    sine_matrix,
    synthesize,
)
from .fracops import InhomFunction, check_order

# Galerkin systems with a larger condition estimate are treated as singular.
MAX_CONDITION = 1e12


class SingularSystemError(RuntimeError):
    """Raised when zero is (numerically) an eigenvalue of the shifted operator."""


class DivergentSeriesError(RuntimeError):
    """Raised when the Born series is not a contraction."""


def check_inverse_order(s):
    return check_order(s, 0.5, 1.0, closed_upper=False)


# ---------------------------------------------------------------------------
# harmonic and fractional Poisson extensions


def _corner_values(g):
    """Average of the face samples meeting at each corner of the box."""
    d = g.domain
    n = d.n
    corners = {}
    for corner in itertools.product((0, 1), repeat=n):
        vals = []
        for face, v in zip(d.faces, g.values):
            a, side = face
            if corner[a] != side:
                continue
            idx = tuple(-1 if corner[i] else 0 for i in range(n) if i != a)
            vals.append(v[idx] if idx else v[()])
        corners[corner] = np.mean(vals)
    return corners


def _multilinear(d, corners, coords):
    """Multilinear interpolant of the corner values at the given coordinates."""
    out = 0.0
    for corner, val in corners.items():
        weight = 1.0
        for i, c in enumerate(corner):
            t = coords[i] / d.lengths[i]
            weight = weight * (t if c else 1.0 - t)
        out = out + val * weight
    return out


def _decay_profile(mu, dist, length):
    """``sinh(mu (L - d)) / sinh(mu L)`` evaluated without overflow."""
    mu = np.asarray(mu, dtype=float)
    dist = np.asarray(dist, dtype=float)
    out = np.empty(np.broadcast(mu, dist).shape)
    zero = np.broadcast_to(mu == 0, out.shape)
    mu_b = np.broadcast_to(mu, out.shape)
    d_b = np.broadcast_to(dist, out.shape)
    m = mu_b[~zero]
    x = d_b[~zero]
    out[~zero] = (np.exp(-m * x) - np.exp(-m * (2 * length - x))) / (1.0 - np.exp(-2 * m * length))
    out[zero] = 1.0 - d_b[zero] / length
    return out


def harmonic_extension(g, face_modes=None):
    """Harmonic function on the box with boundary values ``g``.

    Corner values are matched by a multilinear interpolant (harmonic on a
    box). The remainder on every face is expanded in tangential sines and
    continued inward with hyperbolic-sine profiles.
    """
    d = g.domain
    n = d.n
    corners = _corner_values(g)
    dtype = np.result_type(float, *[v.dtype for v in g.values])
    interior = np.zeros(d.grid, dtype=dtype) + _multilinear(d, corners, d.mesh())
    if n > 1:
        for face, v in zip(d.faces, g.values):
            a, side = face
            tang = d.tangential_axes(face)
            rem = v - _multilinear(d, corners, d.face_mesh(face))
            if face_modes is None:
                kmax = [4 * d.grid[i] for i in tang]
            else:
                kmax = list(np.broadcast_to(face_modes, (len(tang),)))
            coef = closed_sine_coefficients(rem, [d.lengths[i] for i in tang], kmax)
            waves = [np.arange(1, K + 1) * np.pi / d.lengths[i] for K, i in zip(kmax, tang)]
            mu = np.sqrt(sum(np.meshgrid(*[w ** 2 for w in waves], indexing="ij", sparse=True)))
            x = d.axis_nodes(a)
            dist = x if side == 0 else d.lengths[a] - x
            prof = _decay_profile(mu[None], dist.reshape((-1,) + (1,) * len(tang)), d.lengths[a])
            vals = prof * coef[None]
            for j, i in enumerate(tang):
                S = sine_matrix(d.lengths[i], kmax[j], d.axis_nodes(i))
                vals = np.moveaxis(np.tensordot(S, vals, axes=([1], [j + 1])), 0, j + 1)
            interior = interior + np.moveaxis(vals, 0, a)
    return InhomFunction(GridField(d, interior), g)


def fractional_poisson(g, s, face_modes=None):
    """Solution of the inhomogeneous fractional Dirichlet problem with data ``g``.

    For this operator the solution coincides with the harmonic extension;
    ``fracops.inhom_coefficients`` of the result is the a-posteriori residual.
    """
    check_inverse_order(s)
    return harmonic_extension(g, face_modes)


def green_apply(f, s):
    """Coefficients ``lambda_k^{-s} f_k``."""
    s = check_order(s, closed_upper=False)
    return SpectralField(f.domain, f.coeffs * f.domain.eigenvalues ** (-s))


# ---------------------------------------------------------------------------
# potentials and multiplication operators


@dataclass(frozen=True, eq=False)
class Potential:
    """Real potential sampled on the interior grid, with cached norms."""

    q: GridField
    sup_bound: float = field(init=False)
    l2_bound: float = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.q.values)
        if np.iscomplexobj(vals):
            if np.max(np.abs(vals.imag)) > 0:
                raise ValueError("potentials must be real valued")
            vals = vals.real
            object.__setattr__(self, "q", GridField(self.q.domain, vals))
        object.__setattr__(self, "sup_bound", float(np.max(np.abs(vals))))
        object.__setattr__(self, "l2_bound",
                           float(np.sqrt(np.sum(vals ** 2) * self.q.domain.cell_volume)))

    @classmethod
    def from_callable(cls, domain, func):
        return cls(GridField(domain, np.broadcast_to(func(*domain.mesh()), domain.grid).copy()))

    @property
    def domain(self):
        return self.q.domain

    def __mul__(self, scalar):
        return Potential(GridField(self.domain, self.q.values * float(scalar)))

    __rmul__ = __mul__

    def __add__(self, other):
        return Potential(GridField(self.domain, self.q.values + other.q.values))


def multiply(q, c):
    """Coefficients of ``q v`` for ``v = sum c_k phi_k`` (grid multiply, then analyze)."""
    return analyze(GridField(c.domain, q.q.values * synthesize(c).values))


def multiplication_matrix(q):
    """Dense matrix ``Q[j, k] = <q phi_k, phi_j>`` in lexicographic mode order.

    Assembled axis by axis, which equals the pseudo-spectral product exactly.
    """
    d = q.domain
    n = d.n
    vals = q.q.values * d.cell_volume
    factors = []
    for i in range(n):
        S = sine_matrix(d.lengths[i], d.modes[i], d.axis_nodes(i))
        factors.append(S[:, :, None] * S[:, None, :])
    letters = "abc"
    rows = "ijk"
    cols = "lmn"
    spec = ",".join(f"{letters[i]}{rows[i]}{cols[i]}" for i in range(n))
    expr = f"{letters[:n]},{spec}->{rows[:n]}{cols[:n]}"
    Q = np.einsum(expr, vals, *factors, optimize=True)
    M = d.num_modes
    return Q.reshape(M, M)


# ---------------------------------------------------------------------------
# Schrodinger solves


@dataclass(frozen=True, eq=False)
class SchrodingerSolution:
    """Correction ``v`` and base ``P g``; the full solution is their sum."""

    correction: SpectralField
    base: InhomFunction
    method: str
    terms: int = 0
    contraction: float = float("nan")
    residual: float = float("nan")

    @property
    def interior(self):
        return self.base.interior + synthesize(self.correction)


class DirectSolver:
    """LU factorization of ``diag(lambda^s) - Q`` reused across boundary data."""

    def __init__(self, q, s):
        self.q = q
        self.s = check_inverse_order(s)
        d = q.domain
        self.Q = multiplication_matrix(q)
        self.A = np.diag(d.eigenvalues.ravel() ** self.s) - self.Q
        anorm = np.linalg.norm(self.A, 1)
        self.lu, self.piv = sla.lu_factor(self.A, check_finite=True)
        diag = np.abs(np.diag(self.lu))
        if diag.min() == 0.0:
            self.condition = np.inf
        else:
            rcond, info = sla.lapack.dgecon(self.lu, anorm, norm="1")
            self.condition = np.inf if rcond == 0 else 1.0 / rcond
        if not self.condition < MAX_CONDITION:
            raise SingularSystemError(
                f"Galerkin matrix condition estimate {self.condition:.3e} exceeds "
                f"{MAX_CONDITION:.0e}; zero appears to be an eigenvalue of (-Delta)^s - q")

    def solve_rhs(self, rhs):
        """Solve for flattened coefficient vectors (columns for several right sides)."""
        if np.iscomplexobj(rhs):
            return self.solve_rhs(rhs.real) + 1j * self.solve_rhs(rhs.imag)
        return sla.lu_solve((self.lu, self.piv), rhs)

    def solve(self, g):
        d = self.q.domain
        base = harmonic_extension(g)
        rhs = analyze(GridField(d, self.q.q.values * base.interior.values)).coeffs.ravel()
        c = self.solve_rhs(rhs)
        res = np.linalg.norm(self.A @ c - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
        return SchrodingerSolution(SpectralField(d, c.reshape(d.modes)), base, "direct",
                                   residual=float(res))


def schrodinger_direct(q, g, s):
    """Galerkin solve of ``((-Delta_{D,0})^s - q) v = q P g``."""
    return DirectSolver(q, s).solve(g)


def born_operator(q, s):
    """Symmetrized ``lambda^{-s/2} Q lambda^{-s/2}`` as a matrix-free operator."""
    d = q.domain
    scale = d.eigenvalues ** (-s / 2)

    def matvec(x):
        c = SpectralField(d, x.reshape(d.modes) * scale)
        return (multiply(q, c).coeffs * scale).ravel()

    return LinearOperator((d.num_modes, d.num_modes), matvec=matvec, dtype=float)


def contraction_estimate(q, s, seed=0):
    """Spectral radius of ``G^s M_q`` (Lanczos on the symmetric similar operator)."""
    d = q.domain
    if q.sup_bound == 0.0:
        return 0.0
    op = born_operator(q, s)
    if d.num_modes <= 2:
        dense = op @ np.eye(d.num_modes)
        return float(np.max(np.abs(np.linalg.eigvalsh(dense))))
    v0 = np.random.default_rng(seed).standard_normal(d.num_modes)
    vals = eigsh(op, k=1, which="LM", v0=v0, return_eigenvectors=False, tol=1e-8)
    return float(np.abs(vals[0]))


def schrodinger_born(q, g, s, terms, contraction=None):
    """Partial sum of the Born series ``sum_{j=1}^{terms} (G^s M_q)^j P g``."""
    s = check_inverse_order(s)
    if terms < 1:
        raise ValueError("the Born series needs at least one term")
    d = q.domain
    rho = contraction_estimate(q, s) if contraction is None else float(contraction)
    if rho >= 1.0:
        raise DivergentSeriesError(
            f"contraction estimate {rho:.4f} >= 1; the Born series may diverge")
    base = harmonic_extension(g)
    term = green_apply(analyze(GridField(d, q.q.values * base.interior.values)), s)
    total = term
    for _ in range(terms - 1):
        term = green_apply(multiply(q, term), s)
        total = total + term
    return SchrodingerSolution(total, base, f"born({terms})", terms=terms, contraction=rho)
