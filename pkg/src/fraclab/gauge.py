"""Natural gauge, the integral identity, potential-tensor decomposition and stationary phase.

Fields here live on closed ``fd.UniformGrid`` tensor grids (boundary nodes
included) so that boundary flatness can be inspected layer by layer.
Derivatives are fourth-order finite differences unless stated otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.ndimage import map_coordinates, spline_filter
from scipy.special import roots_legendre

from . import fd
from .fd import UniformGrid

# Flatness order of the generated gauges (normal derivatives up to this order vanish).
GAUGE_FLATNESS = 12

# Relative size below which a boundary layer counts as vanishing.
FLATNESS_TOL = 1e-6

# Nodes of the Gauss rule for the radial parameter in the potential formula.
RAY_NODES = 64

# Interpolation order used to evaluate fields along rays.
RAY_INTERP_ORDER = 5


class FlatnessError(ValueError):
    """The generating function does not vanish to the required order on the boundary."""


# ---------------------------------------------------------------------------
# boundary flatness


def layer_defect(w, order):
    """Largest ``|w|`` on the ``order + 1`` grid layers next to any face, relative to ``max |w|``."""
    w = np.asarray(w)
    scale = np.max(np.abs(w))
    if scale == 0:
        return 0.0
    worst = 0.0
    for ax in range(w.ndim):
        k = min(order + 1, w.shape[ax])
        lo = np.take(w, range(k), axis=ax)
        hi = np.take(w, range(w.shape[ax] - k, w.shape[ax]), axis=ax)
        worst = max(worst, np.max(np.abs(lo)), np.max(np.abs(hi)))
    return float(worst / scale)


def first_order_defect(w, grid):
    """Relative size of ``w`` and its normal derivative on the faces."""
    w = np.asarray(w)
    scale = np.max(np.abs(w))
    if scale == 0:
        return 0.0
    grads = fd.gradient(w, grid)
    gscale = max(np.max(np.abs(g)) for g in grads) or 1.0
    worst = 0.0
    for ax in range(w.ndim):
        for end in (0, -1):
            worst = max(worst, np.max(np.abs(np.take(w, end, axis=ax))) / scale,
                        np.max(np.abs(np.take(grads[ax], end, axis=ax))) / gscale)
    return float(worst)


def flatness_order(w, max_order=GAUGE_FLATNESS, tol=FLATNESS_TOL):
    """Largest ``k <= max_order`` whose ``k + 1`` face layers vanish to ``tol`` (``-1`` if none)."""
    order = -1
    for k in range(max_order + 1):
        if layer_defect(w, k) > tol:
            break
        order = k
    return order


# ---------------------------------------------------------------------------
# gauge coefficients


@dataclass(frozen=True, eq=False)
class GaugeCoefficients:
    """Second-, first- and zeroth-order coefficient fields on a common grid.

    ``second`` has shape ``(n, n, *grid.shape)``, ``first`` ``(n, *grid.shape)``.
    """

    grid: UniformGrid
    second: np.ndarray
    first: np.ndarray
    zeroth: np.ndarray
    flatness: int

    def __post_init__(self):
        n = self.grid.ndim
        shape = self.grid.shape
        if self.second.shape != (n, n) + shape or self.first.shape != (n,) + shape \
                or self.zeroth.shape != shape:
            raise ValueError("coefficient fields do not match the grid")
        if not np.array_equal(self.second, np.swapaxes(self.second, 0, 1)):
            raise ValueError("the second-order coefficient must be symmetric")

    @classmethod
    def zeros(cls, grid):
        n = grid.ndim
        return cls(grid, np.zeros((n, n) + grid.shape), np.zeros((n,) + grid.shape),
                   np.zeros(grid.shape), GAUGE_FLATNESS)


def gauge_from_w(w, grid, tol=FLATNESS_TOL):
    """Natural gauge ``(w Id, 2 grad w, Laplacian w)`` of a boundary-flat ``w``."""
    w = np.asarray(w, dtype=float)
    if w.shape != grid.shape:
        raise ValueError("w does not match the grid")
    defect = first_order_defect(w, grid)
    if defect > tol:
        raise FlatnessError(f"w or its normal derivative does not vanish on the boundary "
                            f"(relative defect {defect:.2e} > {tol:.0e})")
    n = grid.ndim
    second = np.zeros((n, n) + grid.shape)
    for i in range(n):
        second[i, i] = w
    first = 2.0 * np.array(fd.gradient(w, grid))
    zeroth = fd.laplacian(w, grid)
    return GaugeCoefficients(grid, second, first, zeroth, max(1, flatness_order(w, tol=tol)))


def flat_bump(grid, core=None, power=GAUGE_FLATNESS + 1):
    """``prod_i (4 t_i (1 - t_i))^power`` in box coordinates ``t``, times an optional core.

    Vanishes to order ``power - 1`` on every face of the grid box.
    """
    mesh = grid.mesh()
    out = np.ones(grid.shape)
    for x, lo, hi in zip(mesh, grid.lower, grid.upper):
        t = (x - lo) / (hi - lo)
        out = out * np.clip(4.0 * t * (1.0 - t), 0.0, None) ** power
    if core is not None:
        out = out * core(*mesh)
    return out


def product_rule_residual(theta, u):
    """Pointwise ``Laplacian(w u) - (theta2 : Hess u + theta1 . grad u + theta0 u)`` for a gauge."""
    grid = theta.grid
    w = theta.second[0, 0]
    return fd.laplacian(w * u, grid) - _apply_coefficients(theta, u)


def _apply_coefficients(theta, u):
    grid = theta.grid
    n = grid.ndim
    H = fd.hessian(u, grid)
    G = fd.gradient(u, grid)
    out = theta.zeroth * u
    for i in range(n):
        out = out + theta.first[i] * G[i]
        for j in range(n):
            out = out + theta.second[i, j] * H[i][j]
    return out


def integral_identity_eval(theta, u, v):
    """Trapezoid quadrature of ``int (theta2 : Hess u + theta1 . grad u + theta0 u) v``."""
    grid = theta.grid
    return complex(grid.integrate(_apply_coefficients(theta, np.asarray(u)) * np.asarray(v)))


def c2_norm(u, grid):
    """``max |u| + max |grad u| + max |Hess u|`` with Euclidean and Frobenius pointwise norms."""
    G = fd.gradient(u, grid)
    H = fd.hessian(u, grid)
    g = np.sqrt(sum(np.abs(x) ** 2 for x in G))
    h = np.sqrt(sum(np.abs(H[i][j]) ** 2 for i in range(grid.ndim) for j in range(grid.ndim)))
    return float(np.max(np.abs(u)) + np.max(g) + np.max(h))


def random_polynomial(rng, ndim, degree=4):
    """Callable polynomial with standard normal coefficients of total degree ``<= degree``."""
    powers = [p for p in itertools.product(range(degree + 1), repeat=ndim) if sum(p) <= degree]
    coeffs = rng.standard_normal(len(powers))

    def poly(*x):
        out = np.zeros(np.broadcast(*x).shape)
        for c, p in zip(coeffs, powers):
            term = c
            for xi, pi in zip(x, p):
                term = term * xi ** pi
            out = out + term
        return out

    return poly


# ---------------------------------------------------------------------------
# decomposition of the second-order coefficient


@dataclass(frozen=True, eq=False)
class PotentialDecomposition:
    """``psi`` and ``w`` with ``theta2 ~ Hess psi + w Id``, plus diagnostics."""

    psi: np.ndarray
    w: np.ndarray
    residual: float
    symmetry_defect: float
    residual_field: np.ndarray


def symmetry_defect(theta2, grid):
    """Relative size of ``d_l theta2_{1j} - d_j theta2_{1l}`` over transverse ``j, l``."""
    n = grid.ndim
    scale = max(np.max(np.abs(theta2[0, j])) for j in range(n)) or 1.0
    worst = 0.0
    for j in range(1, n):
        for l in range(j + 1, n):
            diff = fd.d1(theta2[0, j], l, grid.spacing[l]) - fd.d1(theta2[0, l], j, grid.spacing[j])
            worst = max(worst, np.max(np.abs(diff)) * min(grid.spacing) / scale)
    return float(worst)


def _ray_integrals(theta2, grid):
    """``sum_j y_j int_0^1 theta2_{1j}(y1, t y') dt`` on every node."""
    n = grid.ndim
    mesh = grid.mesh()
    t, wt = np.polynomial.legendre.leggauss(RAY_NODES)
    t = 0.5 * (t + 1.0)
    wt = 0.5 * wt
    idx = np.indices(grid.shape, dtype=float)
    out = np.zeros(grid.shape)
    coeffs = [spline_filter(np.asarray(theta2[0, j], dtype=float), order=RAY_INTERP_ORDER,
                            mode="nearest") for j in range(1, n)]
    for tg, wg in zip(t, wt):
        coords = [idx[0]]
        for ax in range(1, n):
            coords.append((tg * mesh[ax] - grid.lower[ax]) / grid.spacing[ax])
        coords = np.array(coords)
        for j, c in enumerate(coeffs, start=1):
            vals = map_coordinates(c, coords, order=RAY_INTERP_ORDER, mode="nearest",
                                   prefilter=False)
            out += wg * mesh[j] * vals
    return out


def _cumulative_integral(f, grid):
    """Running integral along the first axis with the end-corrected trapezoid rule."""
    d = grid.spacing[0]
    cum = np.zeros_like(f)
    cum[1:] = np.cumsum(0.5 * d * (f[1:] + f[:-1]), axis=0)
    df = fd.d1(f, 0, d)
    return cum - d ** 2 / 12.0 * (df - df[:1])


def psi_from_theta(theta2, grid):
    """Recover ``psi`` and ``w`` from a second-order coefficient of the form ``Hess psi + w Id``.

    ``psi`` integrates the mixed coefficients along rays towards the ``y' = 0``
    axis and then in ``y1``, which fixes ``d psi / d y1 = 0`` on that axis; a
    manufactured ``psi`` is recovered only if it vanishes near the axis. The residual is the relative size of
    ``theta2 - Hess psi - w Id``; it is only meaningful when the symmetry
    defect is small.
    """
    theta2 = np.asarray(theta2, dtype=float)
    n = grid.ndim
    if n < 2:
        raise ValueError("the decomposition needs at least two dimensions")
    if theta2.shape != (n, n) + grid.shape:
        raise ValueError("theta2 does not match the grid")
    if not all(lo <= 0.0 <= hi for lo, hi in zip(grid.lower[1:], grid.upper[1:])):
        raise ValueError("the grid must contain the y' = 0 axis")
    psi = _cumulative_integral(_ray_integrals(theta2, grid), grid)
    H = fd.hessian(psi, grid)
    w = theta2[0, 0] - H[0][0]
    res = np.zeros_like(theta2)
    for i in range(n):
        for j in range(n):
            res[i, j] = theta2[i, j] - H[i][j] - (w if i == j else 0.0)
    scale = np.sqrt(np.sum(theta2 ** 2))
    rel = float(np.sqrt(np.sum(res ** 2)) / scale) if scale else float(np.sqrt(np.sum(res ** 2)))
    return PotentialDecomposition(psi, w, rel, symmetry_defect(theta2, grid), res)


def radial_bump(grid, center, radius, power=8):
    """``(1 - |x - c|^2 / R^2)_+^power`` with its exact gradient and Hessian."""
    mesh = grid.mesh()
    n = grid.ndim
    rel = [x - c for x, c in zip(mesh, center)]
    s = 1.0 - sum(r ** 2 for r in rel) / radius ** 2
    inside = s > 0
    sp = np.where(inside, s, 0.0)
    val = sp ** power
    d1s = power * sp ** (power - 1)
    d2s = power * (power - 1) * sp ** (power - 2)
    grad = np.array([d1s * (-2.0 * r / radius ** 2) for r in rel])
    hess = np.zeros((n, n) + grid.shape)
    for i in range(n):
        for j in range(n):
            hess[i, j] = d2s * 4.0 * rel[i] * rel[j] / radius ** 4
            if i == j:
                hess[i, j] -= d1s * 2.0 / radius ** 2
    return val, grad, hess


# ---------------------------------------------------------------------------
# stationary phase


@dataclass(frozen=True)
class QuadraticPhase:
    """Phase ``y.A y / (2 h)`` with ``A`` real, symmetric and nonsingular."""

    A: tuple
    h: float = 1.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.shape != (2, 2):
            raise ValueError("the phase matrix must be 2 x 2")
        if not np.array_equal(A, A.T):
            raise ValueError("the phase matrix must be symmetric")
        if np.linalg.det(A) == 0.0:
            raise ValueError("the phase matrix is singular")
        if not self.h > 0:
            raise ValueError("h must be positive")
        object.__setattr__(self, "A", tuple(map(tuple, A)))

    @property
    def matrix(self):
        return np.array(self.A)

    @property
    def signature(self):
        ev = np.linalg.eigvalsh(self.matrix)
        return int(np.sum(ev > 0) - np.sum(ev < 0))

    @property
    def det(self):
        return float(np.linalg.det(self.matrix))

    def prefactor(self):
        """``2 pi h exp(i pi sgn A / 4) / |det A|^(1/2)``."""
        return 2 * np.pi * self.h * np.exp(0.25j * np.pi * self.signature) / np.sqrt(abs(self.det))

    def with_h(self, h):
        return QuadraticPhase(self.A, h)


@lru_cache(maxsize=None)
def remainder_constant():
    """``(2 pi)^-2 int dxi / (1 + |xi1|^3 + |xi2|^3)``.

    Bounds ``sup |f|`` of an inverse Fourier integral by
    ``sum_{|alpha| <= 3} ||d^alpha f||_{L^1}``.
    """
    # in polar coordinates the radial integral is c^(-2/3) * 2 pi / (3 sqrt 3)
    def angular(t):
        c = abs(np.cos(t)) ** 3 + abs(np.sin(t)) ** 3
        return c ** (-2.0 / 3.0) * 2 * np.pi / (3 * np.sqrt(3))

    val = integrate.quad(angular, 0, np.pi / 2, epsabs=1e-14, epsrel=1e-13)[0]
    return 4.0 * val / (4.0 * np.pi ** 2)


def _periodic_frequencies(grid):
    if grid.ndim != 2:
        raise ValueError("stationary phase is implemented in two dimensions")
    cells = [m - 1 for m in grid.shape]
    return np.meshgrid(*[2 * np.pi * np.fft.fftfreq(c, d) for c, d in zip(cells, grid.spacing)],
                       indexing="ij")


def _phase_operator_symbol(phase, grid):
    """Fourier multiplier of ``P = (i/2) A^-1 : Hess``."""
    k = _periodic_frequencies(grid)
    Ainv = np.linalg.inv(phase.matrix)
    quad = sum(Ainv[i, j] * k[i] * k[j] for i in range(2) for j in range(2))
    return -0.5j * quad, k


def stationary_phase_expand(a, grid, phase, N):
    """Expansion value and remainder bound of ``int exp(i y.A y / (2h)) a(y) dy``.

    ``a`` is sampled on a closed grid whose box contains its support and the
    origin as a node; derivatives are spectral on the periodized box.
    """
    if N < 1:
        raise ValueError("the expansion needs N >= 1")
    a = np.asarray(a)
    origin = [int(round(-lo / d)) for lo, d in zip(grid.lower, grid.spacing)]
    if any(not (0 <= o < m - 1) or abs(lo + o * d) > 1e-12 * max(1.0, d)
           for o, m, lo, d in zip(origin, grid.shape, grid.lower, grid.spacing)):
        raise ValueError("the origin must be an interior grid node")
    sym, k = _phase_operator_symbol(phase, grid)
    ahat = np.fft.fft2(a[:-1, :-1])
    cell = grid.cell_volume
    h = phase.h
    total = 0.0j
    for j in range(N):
        pj = np.fft.ifft2(ahat * sym ** j)
        total += h ** j / math.factorial(j) * pj[origin[0], origin[1]]
    pref = phase.prefactor()
    top = ahat * sym ** N
    norms = 0.0
    for a1 in range(4):
        for a2 in range(4 - a1):
            deriv = np.fft.ifft2(top * (1j * k[0]) ** a1 * (1j * k[1]) ** a2)
            norms += np.sum(np.abs(deriv)) * cell
    bound = abs(pref) * h ** N / math.factorial(N) * remainder_constant() * norms
    return complex(pref * total), float(bound)


def oscillatory_quadrature(func, phase, half_width, nodes_per_unit=20, block=512):
    """Tensor Gauss-Legendre reference for ``int_{[-w,w]^2} exp(i y.A y/(2h)) a(y) dy``.

    Uses ``ceil(nodes_per_unit * 2 w / h)`` nodes per axis.
    """
    h = phase.h
    m = int(math.ceil(nodes_per_unit * 2 * half_width / h))
    x, wx = roots_legendre(m)
    x = x * half_width
    wx = wx * half_width
    A = phase.matrix
    total = 0.0j
    for start in range(0, m, block):
        xs = x[start:start + block, None]
        ws = wx[start:start + block, None]
        quad = A[0, 0] * xs ** 2 + 2 * A[0, 1] * xs * x[None, :] + A[1, 1] * x[None, :] ** 2
        vals = np.exp(0.5j * quad / h) * func(xs, x[None, :])
        total += np.sum(ws * vals * wx[None, :])
    return complex(total)


def gaussian_reference(phase, width):
    """Closed form of ``int exp(i y.A y/(2h)) exp(-|y|^2/(2 width^2)) dy`` over the plane."""
    M = np.eye(2) / width ** 2 - 1j * phase.matrix / phase.h
    return complex(2 * np.pi / np.sqrt(np.linalg.det(M)))


# ---------------------------------------------------------------------------
# trace relations in two dimensions


@dataclass(frozen=True)
class TraceRelations:
    residuals: tuple
    tol: float

    @property
    def passed(self):
        return all(r <= self.tol for r in self.residuals)


def trace_relations_check(theta, tol=1e-8):
    """Norms of the four trace relations satisfied by two-dimensional natural gauges.

    ``d_x tr(theta2) - theta1_x``, ``d_y tr(theta2) - theta1_y``,
    ``d_x Lap(theta2_11 - theta2_22) + 2 d_y Lap theta2_12`` and
    ``2 d_x Lap theta2_12 - d_y Lap(theta2_11 - theta2_22)``, each as a discrete
    ``L^2`` norm relative to the size of the coefficients.
    """
    grid = theta.grid
    if grid.ndim != 2:
        raise ValueError("trace relations are defined in two dimensions")
    hx, hy = grid.spacing
    t2 = theta.second
    trace = t2[0, 0] + t2[1, 1]
    diff = t2[0, 0] - t2[1, 1]
    off = t2[0, 1]
    lap_diff = fd.laplacian(diff, grid)
    lap_off = fd.laplacian(off, grid)
    fields = (
        fd.d1(trace, 0, hx) - theta.first[0],
        fd.d1(trace, 1, hy) - theta.first[1],
        fd.d1(lap_diff, 0, hx) + 2 * fd.d1(lap_off, 1, hy),
        2 * fd.d1(lap_off, 0, hx) - fd.d1(lap_diff, 1, hy),
    )
    scale = max(np.max(np.abs(t2)), np.max(np.abs(theta.first))) or 1.0
    res = tuple(float(np.sqrt(grid.integrate(np.abs(f) ** 2)) / scale) for f in fields)
    return TraceRelations(res, tol)
