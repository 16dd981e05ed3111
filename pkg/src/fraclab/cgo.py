"""Transport equations and amplitude recursions for exponentially growing solutions.

For the linear phase ``Phi(x) = sign * x.(e1 + i eta)`` with orthonormal
``e1, eta`` the conjugated Laplacian is

    exp(-Phi/h) Delta (exp(Phi/h) A) = Delta A + (sign/h) T A,
    T = 2 (e1 + i eta).grad.

In rotated coordinates ``y1 = x.e1, y2 = x.eta`` and ``z = y1 + i y2`` the
transport operator is ``T = 4 d/dzbar``. Remaining coordinates are parameters.
All fields in this module live on a grid in rotated coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from . import fd
from .fd import UniformGrid

# Largest |Re Phi| / h before exp(Phi/h) is considered unsafe in double precision.
MAX_EXPONENT = 600.0


@dataclass(frozen=True)
class LinearPhase:
    """Linear limiting Carleman weight ``sign * x.(e1 + i eta)`` with parameter ``h``."""

    e1: tuple
    eta: tuple
    sign: int = 1
    h: float = 1.0

    def __post_init__(self):
        e1 = np.asarray(self.e1, dtype=float)
        eta = np.asarray(self.eta, dtype=float)
        if e1.shape != eta.shape or e1.ndim != 1 or len(e1) < 2:
            raise ValueError("e1 and eta must be vectors of the same dimension >= 2")
        if abs(e1 @ e1 - 1) > 1e-12 or abs(eta @ eta - 1) > 1e-12 or abs(e1 @ eta) > 1e-12:
            raise ValueError("phase vectors must be orthonormal")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.h <= 0:
            raise ValueError("h must be positive")
        object.__setattr__(self, "e1", tuple(e1))
        object.__setattr__(self, "eta", tuple(eta))

    def with_h(self, h):
        return LinearPhase(self.e1, self.eta, self.sign, h)

    @property
    def gradient(self):
        """Complex gradient ``sign (e1 + i eta)``; its square vanishes."""
        return self.sign * (np.array(self.e1) + 1j * np.array(self.eta))

    def frame(self):
        """Orthonormal frame whose first two rows are ``e1`` and ``eta``."""
        e1 = np.array(self.e1)
        eta = np.array(self.eta)
        n = len(e1)
        rows = [e1, eta]
        for e in np.eye(n):
            v = e - sum((e @ r) * r for r in rows)
            if len(rows) < n and np.linalg.norm(v) > 1e-8:
                rows.append(v / np.linalg.norm(v))
        return np.array(rows)

    def to_rotated(self, x):
        """Rotated coordinates ``y = R x`` of points ``x`` (last axis is the coordinate)."""
        return np.asarray(x) @ self.frame().T

    def values(self, grid):
        """``Phi`` on a rotated grid, ``sign (y1 + i y2)``."""
        Y = grid.mesh()
        return self.sign * (Y[0] + 1j * Y[1])


def transport_apply(a, grid):
    """``T a = 2 (d/dy1 + i d/dy2) a`` with fourth-order differences."""
    return 2.0 * (fd.d1(a, 0, grid.spacing[0]) + 1j * fd.d1(a, 1, grid.spacing[1]))


# ---------------------------------------------------------------------------
# transport solves


def _plane_center(grid):
    return 0.5 * (grid.lower[0] + grid.upper[0]), 0.5 * (grid.lower[1] + grid.upper[1])


def _check_support(f, tol):
    scale = np.max(np.abs(f))
    if scale == 0:
        return
    frame = np.ones(f.shape[:2], dtype=bool)
    frame[2:-2, 2:-2] = False
    edge = np.max(np.abs(f[frame]))
    if edge > tol * scale:
        raise ValueError(f"right-hand side is not supported inside the working rectangle "
                         f"(edge/max = {edge / scale:.2e}); multiply by a window first")


def _solve_fft(f, grid):
    """Periodic spectral solve of ``4 d/dzbar a = f`` after removing the mean.

    The mean is carried by a normalized Gaussian whose solution is known in
    closed form, so the periodic part has zero mean and the Fourier symbol
    ``2i (k1 + i k2)`` can be inverted off the zero mode.
    """
    m1, m2 = f.shape[:2]
    d1_, d2_ = grid.spacing[:2]
    c1, c2 = _plane_center(grid)
    Y = np.meshgrid(grid.axis(0), grid.axis(1), indexing="ij")
    zc = (Y[0] - c1) + 1j * (Y[1] - c2)
    width = min(grid.upper[0] - grid.lower[0], grid.upper[1] - grid.lower[1])
    sigma = width / 12.0
    r2 = np.abs(zc) ** 2
    gauss = np.exp(-r2 / sigma ** 2) / (np.pi * sigma ** 2)
    extra = (slice(None), slice(None)) + (None,) * (f.ndim - 2)
    mass = np.sum(f, axis=(0, 1)) * d1_ * d2_
    f0 = f - gauss[extra] * mass
    p1, p2 = 2 * m1, 2 * m2
    k1 = 2 * np.pi * np.fft.fftfreq(p1, d1_)
    k2 = 2 * np.pi * np.fft.fftfreq(p2, d2_)
    K1, K2 = np.meshgrid(k1, k2, indexing="ij")
    symbol = 2j * (K1 + 1j * K2)
    symbol[0, 0] = 1.0
    fhat = np.fft.fft2(f0, s=(p1, p2), axes=(0, 1))
    ahat = fhat / symbol[extra]
    ahat[0, 0] = 0.0
    ahat[p1 // 2, :] = 0.0
    ahat[:, p2 // 2] = 0.0
    a = np.fft.ifft2(ahat, axes=(0, 1))[:m1, :m2]
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_part = np.where(r2 > 0, (1.0 - np.exp(-r2 / sigma ** 2)) / (4 * np.pi * zc), 0.0)
    return a + mean_part[extra] * mass


@lru_cache(maxsize=8)
def _cell_kernel(m1, m2, d1_, d2_):
    """Exact integrals of ``1/(4 pi u)`` over grid cells at every node offset."""

    def primitive(x, y):
        r2 = x * x + y * y
        with np.errstate(divide="ignore", invalid="ignore"):
            logr = np.where(r2 > 0, np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
            at1 = np.where(x != 0, x * np.arctan(y / np.where(x != 0, x, 1.0)), 0.0)
            at2 = np.where(y != 0, y * np.arctan(x / np.where(y != 0, y, 1.0)), 0.0)
        return 0.5 * y * logr + at1 - 1j * (0.5 * x * logr + at2)

    ox = np.arange(-(m1 - 1), m1) * d1_
    oy = np.arange(-(m2 - 1), m2) * d2_
    X, Y = np.meshgrid(ox, oy, indexing="ij")
    hx, hy = d1_ / 2, d2_ / 2
    val = (primitive(X + hx, Y + hy) - primitive(X - hx, Y + hy)
           - primitive(X + hx, Y - hy) + primitive(X - hx, Y - hy))
    return val / (4 * np.pi)


def _solve_direct(f, grid):
    """Cauchy transform of the cellwise-constant interpolant of ``f``.

    Every cell's kernel integral is evaluated in closed form (including the
    singular one), so the rule is exact for cellwise-constant data and
    second order for smooth data.
    """
    m1, m2 = f.shape[:2]
    K = _cell_kernel(m1, m2, *grid.spacing[:2])
    if f.ndim == 2:
        return fftconvolve(f, K, mode="valid")
    out = np.empty(f.shape, dtype=complex)
    flat = f.reshape(m1, m2, -1)
    res = out.reshape(m1, m2, -1)
    for j in range(flat.shape[2]):
        res[:, :, j] = fftconvolve(flat[:, :, j], K, mode="valid")
    return out


def transport_solve(f, grid, order=1, method="fft", support_tol=1e-10):
    """Particular solution of ``T^order a = f`` in rotated coordinates.

    ``method="fft"`` requires ``f`` to vanish near the edges of the plane
    (multiply by ``plane_window`` first); ``method="direct"`` applies the
    Cauchy transform over the whole rectangle to any ``f``. Axes beyond the
    first two are parameters. ``order=2`` iterates the solve; for the fft
    method the intermediate solution is windowed by the caller.
    """
    f = np.asarray(f, dtype=complex)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if method == "fft":
        _check_support(f, support_tol)
        solve = _solve_fft
    elif method == "direct":
        solve = _solve_direct
    else:
        raise ValueError(f"unknown method {method!r}")
    a = solve(f, grid)
    if order == 2:
        a = solve(a, grid) if method == "direct" else solve(a * plane_window(grid)[
            (slice(None), slice(None)) + (None,) * (f.ndim - 2)], grid)
    return a


def _smoothstep(t):
    """C-infinity transition from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def plane_window(grid, inner=0.3, outer=0.95):
    """Smooth window in the rotated plane: 1 on the inner fraction, 0 beyond ``outer``."""
    c1, c2 = _plane_center(grid)
    w = np.ones((grid.shape[0], grid.shape[1]))
    for ax, c in ((0, c1), (1, c2)):
        half = 0.5 * (grid.upper[ax] - grid.lower[ax])
        r = np.abs(grid.axis(ax) - c) / half
        prof = 1.0 - _smoothstep((r - inner) / (outer - inner))
        w = w * (prof[:, None] if ax == 0 else prof[None, :])
    return w


def window_region(grid, inner=0.3, margin=0):
    """Mask of nodes where ``plane_window`` equals 1, shrunk by ``margin`` nodes."""
    c1, c2 = _plane_center(grid)
    mask = np.ones(grid.shape, dtype=bool)
    for ax, c in ((0, c1), (1, c2)):
        half = 0.5 * (grid.upper[ax] - grid.lower[ax])
        ok = np.abs(grid.axis(ax) - c) / half <= inner
        idx = np.flatnonzero(ok)
        ok = np.zeros_like(ok)
        ok[idx[0] + margin: idx[-1] - margin + 1] = True
        shape = [1] * grid.ndim
        shape[ax] = -1
        mask &= ok.reshape(shape)
    return mask


# ---------------------------------------------------------------------------
# amplitudes


@dataclass(frozen=True, eq=False)
class CgoAmplitudes:
    """Amplitude sequence ``a_0..a_{m-1}`` (or ``b_j``) on a rotated grid."""

    kind: str
    phase: LinearPhase
    grid: UniformGrid
    terms: tuple
    window: np.ndarray
    recursion_residuals: tuple = field(default=())

    @property
    def order(self):
        return len(self.terms)

    def amplitude(self, h):
        return sum(h ** j * a for j, a in enumerate(self.terms))


def seed_holomorphic(grid, lam=1.0, profile=None):
    """``exp(-i lam z) chi(y3)``, annihilated by ``T``."""
    Y = grid.mesh()
    z = Y[0] + 1j * Y[1]
    a = np.exp(-1j * lam * z)
    if grid.ndim > 2:
        prof = (lambda t: np.exp(-t ** 2)) if profile is None else profile
        for extra in Y[2:]:
            a = a * prof(extra)
    return a


def seed_biharmonic(grid, lam=1.0, profile=None):
    """``conj(z) exp(-i lam z) chi(y3)``, annihilated by ``T^2`` but not ``T``."""
    Y = grid.mesh()
    return (Y[0] - 1j * Y[1]) * seed_holomorphic(grid, lam, profile)


def _relative(num, den):
    n = np.linalg.norm(num)
    d = np.linalg.norm(den)
    return float(n / d) if d > 0 else float(n)


def build_amplitudes(kind, phase, m, seed, grid, seed_tol=1e-6, method="fft",
                     inner=0.3, outer=0.95):
    """Solve the transport recursion for ``m`` amplitudes starting from ``seed``.

    Harmonic: ``T a_j = -sign Delta a_{j-1}``. Biharmonic:
    ``T^2 b_j = -sign (T Delta + Delta T) b_{j-1} - Delta^2 b_{j-2}``.
    Right-hand sides are multiplied by a plane window, so the recursion holds
    exactly where the window equals one.
    """
    if m < 1:
        raise ValueError("order m must be at least 1")
    if kind not in ("harmonic", "biharmonic"):
        raise ValueError(f"unknown kind {kind!r}")
    if isinstance(seed, str) and seed == "default":
        seed = np.ones(grid.shape, dtype=complex)
    seed = np.asarray(seed, dtype=complex)
    if seed.shape != grid.shape:
        raise ValueError("seed shape does not match the grid")
    lap = lambda f: fd.laplacian(f, grid)  # noqa: E731
    T = lambda f: transport_apply(f, grid)  # noqa: E731
    W = plane_window(grid, inner, outer)
    Wb = W[(slice(None), slice(None)) + (None,) * (grid.ndim - 2)]
    region = window_region(grid, inner, margin=4)
    if kind == "harmonic":
        lead, scale = T(seed), fd.d1(seed, 0, grid.spacing[0])
    else:
        lead, scale = T(T(seed)), T(fd.d1(seed, 0, grid.spacing[0]))
    size = np.linalg.norm(scale[region]) + np.linalg.norm(seed[region])
    if np.linalg.norm(lead[region]) > seed_tol * size:
        raise ValueError("seed does not solve the leading transport equation")
    terms = [seed]
    resid = []
    s = phase.sign
    for j in range(1, m):
        if kind == "harmonic":
            rhs = -s * lap(terms[j - 1])
            a = transport_solve(Wb * rhs, grid, 1, method)
            check = T(a) - rhs
        else:
            rhs = -s * (T(lap(terms[j - 1])) + lap(T(terms[j - 1])))
            if j >= 2:
                rhs = rhs - lap(lap(terms[j - 2]))
            first = transport_solve(Wb * rhs, grid, 1, method)
            a = transport_solve(Wb * first, grid, 1, method)
            check = T(T(a)) - rhs
        terms.append(a)
        resid.append(_relative(check[region], rhs[region]))
    return CgoAmplitudes(kind, phase, grid, tuple(terms), W, tuple(resid))


# ---------------------------------------------------------------------------
# conjugated residuals


def _check_resolution(grid, h, phase):
    if 2 * np.pi * h < 4 * max(grid.spacing[:2]):
        raise ValueError(f"h = {h} oscillates faster than the grid resolves")
    reach = max(abs(grid.lower[0]), abs(grid.upper[0]))
    if reach / h > MAX_EXPONENT:
        raise ValueError(f"h = {h} makes exp(Phi/h) overflow on this grid")


def conjugated_laplacian(A, grid, phase, h):
    """``exp(-Phi/h) Delta (exp(Phi/h) A)`` by differencing the product."""
    _check_resolution(grid, h, phase)
    Phi = phase.values(grid)
    E = np.exp(Phi / h)
    return fd.laplacian(E * A, grid) / E


def conjugated_bilaplacian(B, grid, phase, h):
    """``((sign/h) T + Delta)^2 B`` with differenced ``T`` and ``Delta``."""
    _check_resolution(grid, h, phase)

    def L(f):
        return phase.sign / h * transport_apply(f, grid) + fd.laplacian(f, grid)

    return L(L(B))


@dataclass(frozen=True)
class ResidualRow:
    h: float
    lhs_norm: float
    predicted_norm: float
    mismatch: float


@dataclass(frozen=True)
class ResidualTable:
    rows: tuple
    slope: float
    margin: int


def predicted_residual(amps, h):
    """Closed-form remainder left by the truncated amplitude."""
    g = amps.grid
    lap = lambda f: fd.laplacian(f, g)  # noqa: E731
    T = lambda f: transport_apply(f, g)  # noqa: E731
    m = amps.order
    t = amps.terms
    s = amps.phase.sign
    if amps.kind == "harmonic":
        return h ** (m - 1) * lap(t[m - 1])
    lead = s * (T(lap(t[m - 1])) + lap(T(t[m - 1])))
    if m >= 2:
        lead = lead + lap(lap(t[m - 2]))
    return h ** (m - 2) * lead + h ** (m - 1) * lap(lap(t[m - 1]))


def conjugated_residual(amps, h_list, margin=None):
    """Compare the conjugated operator on ``A_m`` with its closed-form remainder.

    Norms are taken on the region where the window equals one, shrunk by
    ``margin`` nodes so no stencil reaches the transition zone.
    """
    g = amps.grid
    if margin is None:
        margin = 6 if amps.kind == "harmonic" else 12
    region = window_region(g, margin=margin)
    rows = []
    for h in h_list:
        A = amps.amplitude(h)
        if amps.kind == "harmonic":
            lhs = conjugated_laplacian(A, g, amps.phase, h)
        else:
            lhs = conjugated_bilaplacian(A, g, amps.phase, h)
        pred = predicted_residual(amps, h)
        rows.append(ResidualRow(float(h), float(np.linalg.norm(lhs[region])),
                                float(np.linalg.norm(pred[region])),
                                _relative((lhs - pred)[region], pred[region])))
    hs = np.array([r.h for r in rows])
    norms = np.array([r.lhs_norm for r in rows])
    ok = norms > 0
    slope = float(np.polyfit(np.log(hs[ok]), np.log(norms[ok]), 1)[0]) if ok.sum() >= 2 else float("nan")
    return ResidualTable(tuple(rows), slope, margin)


def commutator_defect(f, grid):
    """``||T Delta f - Delta T f|| / ||T Delta f||`` with differenced operators."""
    a = transport_apply(fd.laplacian(f, grid), grid)
    b = fd.laplacian(transport_apply(f, grid), grid)
    region = fd.interior_mask(grid.shape, 6)
    return _relative((a - b)[region], a[region])
