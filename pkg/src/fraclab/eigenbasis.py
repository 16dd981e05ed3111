"""Dirichlet sine eigenbasis on axis-aligned boxes.

Eigenpairs, discrete sine analysis and synthesis, boundary traces and the
quadrature rules shared by every other module.

Conventions
-----------
* The box is ``(0, L_1) x ... x (0, L_n)``.
* Interior grid nodes along axis ``i`` are ``j L_i / (G_i + 1)`` for
  ``j = 1..G_i``. Face samples live on the *closed* tangential grid, which
  also contains the endpoints ``0`` and ``L_i``.
* Coefficient arrays have shape ``domain.modes`` and C-order flattening is the
  lexicographic mode order used by all matrices.
* Faces are ``(axis, side)`` pairs with ``side`` 0 for ``x_axis = 0`` and 1 for
  ``x_axis = L_axis``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dstn

# Relative accuracy expected from the interior sine transform on band-limited
# fields; callers compare against it when they check round trips.
TRANSFORM_TOL = 1e-12

# Degree of the local interpolant used by the product-integration rules.
INTERP_DEGREE = 7


@dataclass(frozen=True)
class BoxDomain:
    """Rectangular domain with its truncated eigenbasis and sample grid."""

    lengths: tuple
    modes: tuple
    grid: tuple

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        modes = tuple(int(v) for v in np.atleast_1d(self.modes))
        grid = tuple(int(v) for v in np.atleast_1d(self.grid))
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "grid", grid)
        n = len(lengths)
        if not 1 <= n <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {n}")
        if len(modes) != n or len(grid) != n:
            raise ValueError("lengths, modes and grid must have the same length")
        if any(v <= 0 for v in lengths):
            raise ValueError("axis lengths must be positive")
        if any(v < 1 for v in modes):
            raise ValueError("mode counts must be at least 1")
        if any(g < 2 * m for g, m in zip(grid, modes)):
            raise ValueError("grid counts must be at least twice the mode counts")

    @classmethod
    def cube(cls, n, modes, grid=None, length=np.pi):
        """Box with equal sides; ``grid`` defaults to twice ``modes``."""
        modes = tuple(np.broadcast_to(modes, (n,)).tolist())
        if grid is None:
            grid = tuple(2 * m for m in modes)
        grid = tuple(np.broadcast_to(grid, (n,)).tolist())
        return cls((length,) * n, modes, grid)

    def refined(self, modes, grid=None):
        """Same box with a different truncation."""
        modes = tuple(np.broadcast_to(modes, (self.n,)).tolist())
        if grid is None:
            grid = tuple(2 * m for m in modes)
        return BoxDomain(self.lengths, modes, grid)

    @property
    def n(self):
        return len(self.lengths)

    @property
    def spacing(self):
        return tuple(L / (G + 1) for L, G in zip(self.lengths, self.grid))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def center(self):
        return np.array(self.lengths) / 2

    def axis_nodes(self, i):
        """Interior nodes along axis ``i``."""
        return np.arange(1, self.grid[i] + 1) * self.spacing[i]

    def closed_nodes(self, i):
        """Interior nodes plus both endpoints along axis ``i``."""
        return np.arange(0, self.grid[i] + 2) * self.spacing[i]

    def mesh(self):
        """Interior grid coordinates as a list of broadcastable arrays."""
        return np.meshgrid(*[self.axis_nodes(i) for i in range(self.n)], indexing="ij")

    def mode_numbers(self, i):
        return np.arange(1, self.modes[i] + 1)

    def wavenumbers(self, i):
        return self.mode_numbers(i) * np.pi / self.lengths[i]

    @property
    def eigenvalues(self):
        """All retained eigenvalues, shape ``modes``."""
        lam = np.zeros(self.modes)
        for i in range(self.n):
            shape = [1] * self.n
            shape[i] = self.modes[i]
            lam = lam + (self.wavenumbers(i) ** 2).reshape(shape)
        return lam

    @property
    def num_modes(self):
        return int(np.prod(self.modes))

    @property
    def faces(self):
        return [(a, side) for a in range(self.n) for side in (0, 1)]

    def tangential_axes(self, face):
        a, _ = _check_face(self, face)
        return [i for i in range(self.n) if i != a]

    def face_shape(self, face):
        return tuple(self.grid[i] + 2 for i in self.tangential_axes(face))

    def face_measure(self, face):
        return float(np.prod([self.lengths[i] for i in self.tangential_axes(face)]))

    def face_mesh(self, face):
        """Full coordinates of the closed face grid, one array per axis."""
        a, side = _check_face(self, face)
        tang = self.tangential_axes(face)
        axes = [self.closed_nodes(i) for i in tang]
        grids = np.meshgrid(*axes, indexing="ij") if axes else []
        shape = self.face_shape(face)
        coords = []
        it = iter(grids)
        for i in range(self.n):
            if i == a:
                coords.append(np.full(shape, side * self.lengths[a]))
            else:
                coords.append(next(it))
        return coords


def _check_face(domain, face):
    try:
        a, side = int(face[0]), int(face[1])
    except (TypeError, ValueError, IndexError):
        raise ValueError(f"invalid face {face!r}") from None
    if not (0 <= a < domain.n and side in (0, 1)):
        raise ValueError(f"invalid face {face!r} for a {domain.n}-dimensional box")
    return a, side


def _check_mode(domain, k):
    k = tuple(int(v) for v in np.atleast_1d(k))
    if len(k) != domain.n or any(not 1 <= kk <= N for kk, N in zip(k, domain.modes)):
        raise ValueError(f"mode {k} outside the truncation {domain.modes}")
    return k


# ---------------------------------------------------------------------------
# field containers


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples on the interior tensor grid."""

    domain: BoxDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.domain.grid:
            raise ValueError(f"grid field shape {values.shape} != {self.domain.grid}")
        object.__setattr__(self, "values", values)

    def _lift(self, other):
        if isinstance(other, GridField):
            _same_domain(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridField(self.domain, self.values + self._lift(other))

    def __sub__(self, other):
        return GridField(self.domain, self.values - self._lift(other))

    def __mul__(self, other):
        return GridField(self.domain, self.values * self._lift(other))

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return GridField(self.domain, -self.values)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients ``c_k = <v, phi_k>`` over the truncated basis."""

    domain: BoxDomain
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs)
        if coeffs.shape != self.domain.modes:
            raise ValueError(f"coefficient shape {coeffs.shape} != {self.domain.modes}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, domain, dtype=float):
        return cls(domain, np.zeros(domain.modes, dtype=dtype))

    @classmethod
    def unit(cls, domain, k):
        k = _check_mode(domain, k)
        c = np.zeros(domain.modes)
        c[tuple(kk - 1 for kk in k)] = 1.0
        return cls(domain, c)

    def _lift(self, other):
        if isinstance(other, SpectralField):
            _same_domain(self, other)
            return other.coeffs
        return other

    def __add__(self, other):
        return SpectralField(self.domain, self.coeffs + self._lift(other))

    def __sub__(self, other):
        return SpectralField(self.domain, self.coeffs - self._lift(other))

    def __mul__(self, other):
        return SpectralField(self.domain, self.coeffs * self._lift(other))

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.domain, -self.coeffs)

    def norm(self):
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """Per-face samples on closed tangential grids with quadrature weights.

    ``neumann`` optionally records coefficients ``c`` with the field equal to
    ``sum_k c_k d_nu phi_k``. Pairings then use the closed form of the
    tangential sine factor instead of sampled quadrature.
    """

    domain: BoxDomain
    values: tuple
    weights: tuple = None
    neumann: np.ndarray = None

    def __post_init__(self):
        d = self.domain
        values = tuple(np.asarray(v) for v in self.values)
        if len(values) != 2 * d.n:
            raise ValueError(f"expected {2 * d.n} faces, got {len(values)}")
        for face, v in zip(d.faces, values):
            if v.shape != d.face_shape(face):
                raise ValueError(f"face {face} samples have shape {v.shape}, "
                                 f"expected {d.face_shape(face)}")
        object.__setattr__(self, "values", values)
        if self.weights is None:
            object.__setattr__(self, "weights", face_weights(d))
        if self.neumann is not None:
            object.__setattr__(self, "neumann", np.asarray(self.neumann))

    @classmethod
    def zeros(cls, domain):
        return cls(domain, tuple(np.zeros(domain.face_shape(f)) for f in domain.faces))

    def conj(self):
        neu = None if self.neumann is None else np.conj(self.neumann)
        return BoundaryField(self.domain, tuple(np.conj(v) for v in self.values),
                             self.weights, neu)

    def __mul__(self, scalar):
        neu = None if self.neumann is None else self.neumann * scalar
        return BoundaryField(self.domain, tuple(v * scalar for v in self.values),
                             self.weights, neu)

    __rmul__ = __mul__

    def __add__(self, other):
        _same_domain(self, other)
        neu = None
        if self.neumann is not None and other.neumann is not None:
            neu = self.neumann + other.neumann
        return BoundaryField(self.domain,
                             tuple(a + b for a, b in zip(self.values, other.values)),
                             self.weights, neu)

    def __sub__(self, other):
        return self + (-1.0) * other

    def max_abs(self):
        return max(float(np.max(np.abs(v))) if v.size else 0.0 for v in self.values)


def _same_domain(a, b):
    if a.domain != b.domain:
        raise ValueError("fields live on different domains")


# ---------------------------------------------------------------------------
# eigenpairs


def sine_matrix(length, nmodes, x):
    """``sqrt(2/L) sin(k pi x / L)`` for k = 1..nmodes, shape (len(x), nmodes)."""
    k = np.arange(1, nmodes + 1)
    return np.sqrt(2.0 / length) * np.sin(np.outer(x, k) * np.pi / length)


def mode_eigenvalue(domain, k):
    """Closed-form eigenvalue ``sum_i (k_i pi / L_i)^2``."""
    k = _check_mode(domain, k)
    return float(sum((kk * np.pi / L) ** 2 for kk, L in zip(k, domain.lengths)))


def _as_points(domain, points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, domain.n) if domain.n > 1 else pts.reshape(-1, 1)
    if pts.shape[-1] != domain.n:
        raise ValueError(f"points must have {domain.n} coordinates")
    return pts


def eval_eigenfunction(domain, k, points):
    """Normalized eigenfunction values at points in the closed box."""
    k = _check_mode(domain, k)
    pts = _as_points(domain, points)
    tol = 1e-12 * max(domain.lengths)
    L = np.array(domain.lengths)
    if np.any(pts < -tol) or np.any(pts > L + tol):
        raise ValueError("point outside the closed domain")
    vals = np.ones(len(pts))
    for i, (kk, Li) in enumerate(zip(k, domain.lengths)):
        vals = vals * np.sqrt(2.0 / Li) * np.sin(kk * np.pi * pts[:, i] / Li)
    return vals


def normal_derivative_factor(domain, axis, side):
    """Outward normal derivative of the 1D factor along ``axis`` at a face."""
    kk = domain.mode_numbers(axis)
    L = domain.lengths[axis]
    fac = -(kk * np.pi / L) * np.sqrt(2.0 / L)
    if side == 1:
        fac = -fac * np.cos(kk * np.pi)
    return fac


def eval_normal_derivative(domain, k, face, points):
    """Outward normal derivative of ``phi_k`` at points of one face."""
    a, side = _check_face(domain, face)
    k = _check_mode(domain, k)
    pts = _as_points(domain, points)
    tol = 1e-10 * max(domain.lengths)
    if np.any(np.abs(pts[:, a] - side * domain.lengths[a]) > tol):
        raise ValueError(f"points are not on face {face}")
    La = domain.lengths[a]
    vals = np.full(len(pts), -(k[a] * np.pi / La) * np.sqrt(2.0 / La))
    if side == 1:
        vals = -vals * np.cos(k[a] * np.pi)
    for i in range(domain.n):
        if i != a:
            Li = domain.lengths[i]
            vals = vals * np.sqrt(2.0 / Li) * np.sin(k[i] * np.pi * pts[:, i] / Li)
    return vals


# ---------------------------------------------------------------------------
# interior sine transform


def _dst_scale(domain):
    # sum_j f_j sin(j k pi/(G+1)) equals half the unnormalized DST-I output
    return np.prod([0.5 * np.sqrt(2.0 / L) * h for L, h in zip(domain.lengths, domain.spacing)])


def analyze(f):
    """Sine coefficients of interior samples (exact on band-limited fields)."""
    d = f.domain
    full = dstn(f.values, type=1) if np.isrealobj(f.values) else (
        dstn(f.values.real, type=1) + 1j * dstn(f.values.imag, type=1))
    coeffs = full[tuple(slice(0, N) for N in d.modes)] * _dst_scale(d)
    return SpectralField(d, coeffs)


def synthesize(c):
    """Interior samples of ``sum_k c_k phi_k``."""
    d = c.domain
    padded = np.zeros(d.grid, dtype=c.coeffs.dtype)
    padded[tuple(slice(0, N) for N in d.modes)] = c.coeffs
    scale = np.prod([0.5 * np.sqrt(2.0 / L) for L in d.lengths])
    if np.isrealobj(padded):
        vals = dstn(padded, type=1)
    else:
        vals = dstn(padded.real, type=1) + 1j * dstn(padded.imag, type=1)
    return GridField(d, vals * scale)


def volume_inner(f, g):
    """Quadrature of ``int f conj(g)`` on the interior grid."""
    _same_domain(f, g)
    return complex(np.sum(f.values * np.conj(g.values)) * f.domain.cell_volume)


# ---------------------------------------------------------------------------
# product-integration rules on closed uniform grids


@lru_cache(maxsize=None)
def _local_interpolation(npts, nq):
    """Map closed-grid samples to Gauss points inside every cell.

    Each cell uses the degree ``INTERP_DEGREE`` Lagrange interpolant through
    the nearest nodes. Returns the sparse-ish interpolation matrix, the Gauss
    points in cell units and their weights (cell units).
    """
    x, w = np.polynomial.legendre.leggauss(nq)
    t = 0.5 * (x + 1.0)
    p = min(INTERP_DEGREE, npts - 1)
    E = np.zeros(((npts - 1) * nq, npts))
    for i in range(npts - 1):
        start = min(max(i - p // 2, 0), npts - 1 - p)
        nodes = np.arange(start, start + p + 1)
        xq = i + t
        for jj, j in enumerate(nodes):
            others = np.delete(nodes, jj)
            E[i * nq:(i + 1) * nq, j] = np.prod((xq[:, None] - others) / (j - others), axis=1)
    pts = (np.arange(npts - 1)[:, None] + t[None, :]).ravel()
    return E, pts, np.tile(0.5 * w, npts - 1)


def _gauss_count(kmax, ncells):
    # enough Gauss points per cell to integrate the sine exactly to round-off
    return 16 + int(np.ceil(2.0 * kmax / max(ncells, 1)))


@lru_cache(maxsize=None)
def sine_weights(length, npts, kmax):
    """Weights ``W[k-1, j]`` with ``sum_j W f_j ~ int_0^L f phi_k``.

    ``f`` is sampled on ``npts`` uniform nodes including both endpoints. The
    rule integrates a local polynomial interpolant of ``f`` against the sine
    exactly, so it stays accurate for oscillatory modes beyond the grid.
    """
    ncells = npts - 1
    h = length / ncells
    E, pts, w = _local_interpolation(npts, _gauss_count(kmax, ncells))
    S = sine_matrix(length, kmax, pts * h)
    W = (S * (w * h)[:, None]).T @ E
    W.setflags(write=False)
    return W


@lru_cache(maxsize=None)
def integral_weights(length, npts):
    """Positive weights for ``int_0^L f`` on a closed uniform grid."""
    if npts == 1:
        return np.ones(1)
    ncells = npts - 1
    h = length / ncells
    E, _, w = _local_interpolation(npts, 8)
    W = (w * h) @ E
    if np.any(W <= 0):
        W = np.full(npts, h)
        W[[0, -1]] = h / 2
    W.setflags(write=False)
    return W


def face_weights(domain):
    """Tensor quadrature weights on every closed face grid."""
    out = []
    for face in domain.faces:
        tang = domain.tangential_axes(face)
        w = np.ones(())
        for i in tang:
            w = np.multiply.outer(w, integral_weights(domain.lengths[i], domain.grid[i] + 2))
        out.append(w)
    return tuple(out)


def closed_sine_coefficients(values, lengths, kmax):
    """Sine coefficients of samples on a closed tensor grid.

    ``values`` has one axis per entry of ``lengths``; ``kmax`` gives the
    number of modes kept per axis.
    """
    out = np.asarray(values)
    for ax, (L, K) in enumerate(zip(lengths, kmax)):
        W = sine_weights(float(L), out.shape[ax], int(K))
        out = np.moveaxis(np.tensordot(W, out, axes=([1], [ax])), 0, ax)
    return out


def face_sine_coefficients(bf, face, kmax=None):
    """Tangential sine coefficients of one face of a boundary field."""
    d = bf.domain
    tang = d.tangential_axes(face)
    if kmax is None:
        kmax = [d.modes[i] for i in tang]
    idx = d.faces.index(tuple(face))
    return closed_sine_coefficients(bf.values[idx], [d.lengths[i] for i in tang], kmax)


def trace_normal_pairings(bf):
    """``<g, d_nu phi_k>`` on the boundary for every retained mode.

    The tangential factor of ``d_nu phi_k`` is a sine, integrated against the
    face samples with the product-integration rule.
    """
    d = bf.domain
    out = np.zeros(d.modes, dtype=np.result_type(*[v.dtype for v in bf.values], float))
    for face in d.faces:
        a, side = face
        tangential = face_sine_coefficients(bf, face)
        fac = normal_derivative_factor(d, a, side)
        out = out + np.expand_dims(tangential, a) * fac.reshape(
            [-1 if i == a else 1 for i in range(d.n)])
    return out


def neumann_trace(c):
    """Boundary samples of ``sum_k c_k d_nu phi_k`` (closed face grids)."""
    d = c.domain
    vals = []
    for face in d.faces:
        a, side = face
        fac = normal_derivative_factor(d, a, side)
        tang_coeffs = np.tensordot(fac, c.coeffs, axes=([0], [a]))
        out = tang_coeffs
        for j, i in enumerate(d.tangential_axes(face)):
            S = sine_matrix(d.lengths[i], d.modes[i], d.closed_nodes(i))
            out = np.moveaxis(np.tensordot(S, out, axes=([1], [j])), 0, j)
        vals.append(np.asarray(out))
    return BoundaryField(d, tuple(vals), neumann=c.coeffs)


def boundary_inner(a, b, exact=True):
    """``int_{boundary} a conj(b)``, summed over all faces.

    When one side carries Neumann-mode coefficients and ``exact`` is set, the
    pairing is assembled mode by mode with the product-integration rule.
    Otherwise the face quadrature weights are used directly.
    """
    _same_domain(a, b)
    if exact and b.neumann is not None:
        return complex(np.sum(trace_normal_pairings(a) * np.conj(b.neumann)))
    if exact and a.neumann is not None:
        return complex(np.conj(boundary_inner(b, a, exact=True)))
    total = 0.0 + 0.0j
    for va, vb, w in zip(a.values, b.values, a.weights):
        total += np.sum(w * va * np.conj(vb))
    return complex(total)


def boundary_pairing(a, b, exact=True):
    """Bilinear pairing ``int_{boundary} a b`` (no conjugation)."""
    return boundary_inner(a, b.conj(), exact=exact)


# ---------------------------------------------------------------------------
# sampling helpers


def sample_grid(domain, func):
    """Evaluate ``func(*coords)`` on the interior grid."""
    return GridField(domain, np.broadcast_to(func(*domain.mesh()), domain.grid).copy())


def sample_boundary(domain, func):
    """Evaluate ``func(*coords)`` on every closed face grid."""
    vals = []
    for face in domain.faces:
        coords = domain.face_mesh(face)
        vals.append(np.broadcast_to(np.asarray(func(*coords)), domain.face_shape(face)).copy())
    return BoundaryField(domain, tuple(vals))


def closed_values(interior, trace):
    """Samples on the closed grid: interior values framed by the trace.

    Corner and edge nodes shared by several faces take the value of the last
    face written; for continuous data the faces agree there.
    """
    d = interior.domain
    _same_domain(interior, trace)
    dtype = np.result_type(interior.values.dtype, *[v.dtype for v in trace.values])
    U = np.zeros(tuple(G + 2 for G in d.grid), dtype=dtype)
    U[tuple(slice(1, -1) for _ in range(d.n))] = interior.values
    for face, v in zip(d.faces, trace.values):
        a, side = face
        idx = [slice(None)] * d.n
        idx[a] = -1 if side else 0
        U[tuple(idx)] = v
    return U


def _blend_profiles(length, nodes):
    """Linear blending functions ``1 - x/L`` and ``x/L`` at ``nodes``."""
    return 1.0 - nodes / length, nodes / length


def _blend_moments(length, kmax):
    """``int (1 - x/L) phi_k`` and ``int (x/L) phi_k`` in closed form."""
    k = np.arange(1, kmax + 1)
    base = np.sqrt(2.0 / length) * length / (k * np.pi)
    return base, -base * np.cos(k * np.pi)


def boundary_lift(interior, trace):
    """Transfinite (Coons) lift of the trace and its sine coefficients.

    Returns the lift on the interior grid and its coefficients. The lift
    reproduces the trace on every face, so the remainder has zero trace and
    is handled by the interior sine transform.
    """
    d = interior.domain
    U = closed_values(interior, trace)
    n = d.n
    lift = np.zeros(d.grid, dtype=U.dtype)
    coeffs = np.zeros(d.modes, dtype=U.dtype)
    for r in range(1, n + 1):
        sign = (-1) ** (r + 1)
        for S in itertools.combinations(range(n), r):
            rest = [i for i in range(n) if i not in S]
            for sides in itertools.product((0, 1), repeat=r):
                idx = [slice(None)] * n
                for a, sd in zip(S, sides):
                    idx[a] = -1 if sd else 0
                restricted = U[tuple(idx)]  # closed grid over the remaining axes
                # grid values
                inner = restricted[tuple(slice(1, -1) for _ in rest)]
                term = np.asarray(inner)
                shape_full = [d.grid[i] if i in rest else 1 for i in range(n)]
                term = term.reshape(shape_full)
                for a, sd in zip(S, sides):
                    prof = _blend_profiles(d.lengths[a], d.axis_nodes(a))[sd]
                    term = term * prof.reshape([-1 if i == a else 1 for i in range(n)])
                lift = lift + sign * term
                # coefficients
                c = closed_sine_coefficients(restricted, [d.lengths[i] for i in rest],
                                             [d.modes[i] for i in rest])
                c = np.asarray(c).reshape([d.modes[i] if i in rest else 1 for i in range(n)])
                for a, sd in zip(S, sides):
                    mom = _blend_moments(d.lengths[a], d.modes[a])[sd]
                    c = c * mom.reshape([-1 if i == a else 1 for i in range(n)])
                coeffs = coeffs + sign * c
    return GridField(d, lift), SpectralField(d, coeffs)


def volume_mode_inner(interior, trace=None):
    """``<u, phi_k>`` for a field with possibly nonzero boundary values.

    The interior sine transform is exact for band-limited fields with zero
    trace but only second-order accurate when the trace is nonzero, so the
    trace is first removed with ``boundary_lift``.
    """
    if trace is None or trace.max_abs() == 0.0:
        return analyze(interior)
    lift, lift_coeffs = boundary_lift(interior, trace)
    rest, rest_coeffs = _curvature_correction(interior - lift)
    return analyze(rest) + lift_coeffs + rest_coeffs


@lru_cache(maxsize=None)
def _one_sided_second_derivative(npts):
    """Stencil for ``f''(0)`` from ``f(0), f(h), ...`` (unit spacing)."""
    x = np.arange(npts, dtype=float)
    V = np.vander(x, npts, increasing=True).T
    rhs = np.zeros(npts)
    rhs[2] = 2.0
    return np.linalg.solve(V, rhs)


def _curvature_profiles(length, x):
    """Cubics vanishing at both ends with unit curvature at one end."""
    p0 = (length - x) ** 3 / (6 * length) - length * (length - x) / 6
    p1 = x ** 3 / (6 * length) - length * x / 6
    return p0, p1


def _curvature_moments(length, kmax):
    kappa = np.arange(1, kmax + 1) * np.pi / length
    base = np.sqrt(2.0 / length) / kappa ** 3
    return -base, base * np.cos(kappa * length)


def _curvature_correction(remainder):
    """Split off the normal curvature of a zero-trace remainder.

    The odd extension of a field that vanishes on the boundary still has a
    jump in its second normal derivative, which limits the sine transform
    to third order in the mode coefficients. Subtracting cubic profiles
    that carry that curvature leaves a smoother remainder; their sine
    coefficients are known in closed form up to a tangential transform.
    """
    d = remainder.domain
    n = d.n
    R = np.zeros(tuple(G + 2 for G in d.grid), dtype=remainder.values.dtype)
    R[tuple(slice(1, -1) for _ in range(n))] = remainder.values
    coeffs = np.zeros(d.modes, dtype=R.dtype)
    for a in range(n):
        npts = min(5, d.grid[a] + 2)
        stencil = _one_sided_second_derivative(npts) / d.spacing[a] ** 2
        closed = d.closed_nodes(a)
        profiles = _curvature_profiles(d.lengths[a], closed)
        moments = _curvature_moments(d.lengths[a], d.modes[a])
        tang = [i for i in range(n) if i != a]
        shape = [-1 if i == a else 1 for i in range(n)]
        for side in (0, 1):
            sl = np.moveaxis(R, a, 0)
            pts = sl[:npts] if side == 0 else sl[::-1][:npts]
            curv = np.tensordot(stencil, pts, axes=([0], [0]))
            # tangential edges already vanish for continuous data
            for j in range(curv.ndim):
                idx = [slice(None)] * curv.ndim
                idx[j] = [0, -1]
                curv[tuple(idx)] = 0.0
            R = R - profiles[side].reshape(shape) * np.expand_dims(curv, a)
            c = closed_sine_coefficients(curv, [d.lengths[i] for i in tang],
                                         [d.modes[i] for i in tang])
            coeffs = coeffs + moments[side].reshape(shape) * np.expand_dims(c, a)
    inner = R[tuple(slice(1, -1) for _ in range(n))]
    return GridField(d, inner), coeffs
