"""Spectral fractional Laplacians, eigenbasis Sobolev norms and boundary identities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigenbasis import (
    BoundaryField,
    GridField,
    SpectralField,
    boundary_inner,
    neumann_trace,
    sample_boundary,
    sample_grid,
    trace_normal_pairings,
    volume_mode_inner,
)


def check_order(s, lower=0.0, upper=1.0, closed_upper=True):
    s = float(s)
    ok = lower < s < upper or (closed_upper and s == upper)
    if not ok:
        bracket = "]" if closed_upper else ")"
        raise ValueError(f"fractional order {s} outside ({lower}, {upper}{bracket}")
    return s


@dataclass(frozen=True, eq=False)
class InhomFunction:
    """A function on the closed box: interior samples, trace and optional boundary Laplacian."""

    interior: GridField
    trace: BoundaryField
    laplacian_trace: BoundaryField = None

    def __post_init__(self):
        if self.interior.domain != self.trace.domain:
            raise ValueError("interior and trace live on different domains")
        if self.laplacian_trace is not None and self.laplacian_trace.domain != self.trace.domain:
            raise ValueError("laplacian trace lives on a different domain")

    @property
    def domain(self):
        return self.interior.domain

    @classmethod
    def from_callable(cls, domain, func, laplacian=None):
        """Sample ``func(*coords)`` in the interior and on every face."""
        lap = None if laplacian is None else sample_boundary(domain, laplacian)
        return cls(sample_grid(domain, func), sample_boundary(domain, func), lap)

    @classmethod
    def from_spectral(cls, c):
        """Zero-trace function ``sum_k c_k phi_k``."""
        from .eigenbasis import synthesize

        return cls(synthesize(c), BoundaryField.zeros(c.domain))

    def __add__(self, other):
        lap = None
        if self.laplacian_trace is not None and other.laplacian_trace is not None:
            lap = self.laplacian_trace + other.laplacian_trace
        return InhomFunction(self.interior + other.interior, self.trace + other.trace, lap)

    def __mul__(self, scalar):
        lap = None if self.laplacian_trace is None else self.laplacian_trace * scalar
        return InhomFunction(self.interior * scalar, self.trace * scalar, lap)

    __rmul__ = __mul__


def apply_homogeneous(v, s):
    """Multiply coefficients by ``lambda_k^s``."""
    s = check_order(s)
    return SpectralField(v.domain, v.coeffs * v.domain.eigenvalues ** s)


def volume_coefficients(u):
    """``<u, phi_k>`` for every retained mode."""
    return volume_mode_inner(u.interior, u.trace)


def boundary_coefficients(u):
    """``<u, d_nu phi_k>`` on the boundary for every retained mode."""
    return SpectralField(u.domain, trace_normal_pairings(u.trace))


def inhom_coefficients(u, s):
    """Coefficients ``lambda^s (<u, phi> + lambda^{-1} <u, d_nu phi>)``."""
    s = check_order(s, closed_upper=False)
    lam = u.domain.eigenvalues
    c = volume_coefficients(u).coeffs + boundary_coefficients(u).coeffs / lam
    return SpectralField(u.domain, lam ** s * c)


def sobolev_norm(v, gamma):
    """Truncated eigenbasis Sobolev norm ``sqrt(sum lambda^gamma |c|^2)``."""
    lam = v.domain.eigenvalues
    return float(np.sqrt(np.sum(lam ** gamma * np.abs(v.coeffs) ** 2)))


def solve_fractional_dirichlet(v, s):
    """Coefficients of ``w`` with ``(-Delta)^{1-s} w = v`` (homogeneous operator)."""
    return SpectralField(v.domain, v.coeffs * v.domain.eigenvalues ** (-(1.0 - s)))


def ibp_residual(u, v, s):
    """Defect in the fractional integration-by-parts formula.

    The boundary term is integrated by face quadrature from sampled values of
    the Neumann trace; the two volume terms are coefficient sums.
    """
    s = check_order(s, closed_upper=False)
    w = solve_fractional_dirichlet(v, s)
    dnw = neumann_trace(w)
    boundary = boundary_inner(u.trace, dnw, exact=False)
    lhs_u = np.sum(inhom_coefficients(u, s).coeffs * np.conj(v.coeffs))
    rhs_v = np.sum(volume_coefficients(u).coeffs * np.conj(apply_homogeneous(v, s).coeffs))
    return float(abs(boundary - lhs_u + rhs_v))


def noncommutation_gap(u, s):
    """Difference between the two orders of composing the classical and fractional Laplacian.

    ``E1`` applies the inhomogeneous fractional operator to ``-Delta u``;
    ``E2`` applies ``-Delta`` (in its eigenbasis form with boundary correction)
    to ``(-Delta_D)^s u``. Both are expanded mode by mode through boundary
    pairings, so the gap reduces to boundary terms.
    """
    s = check_order(s, closed_upper=False)
    if u.laplacian_trace is None:
        raise ValueError("noncommutation_gap needs the boundary values of the Laplacian")
    d = u.domain
    lam = d.eigenvalues
    vol = volume_coefficients(u).coeffs
    bnd = boundary_coefficients(u).coeffs
    lap_bnd = trace_normal_pairings(u.laplacian_trace)
    # <-Delta u, phi_k> = lambda <u, phi_k> + <u, d_nu phi_k> by Green's identity,
    # and the boundary trace of -Delta u is -(Delta u)|_boundary
    e1 = lam ** s * (lam * vol + bnd - lap_bnd / lam)
    f = inhom_coefficients(u, s)
    # F = (-Delta_D)^s u is a finite sine series, so its trace vanishes
    f_trace_term = trace_normal_pairings(BoundaryField.zeros(d))
    e2 = lam * f.coeffs + f_trace_term
    return SpectralField(d, e1 - e2)


def noncommutation_boundary_form(u, s):
    """Closed-form boundary expression for the non-commutation gap."""
    s = check_order(s, closed_upper=False)
    lam = u.domain.eigenvalues
    lap_bnd = trace_normal_pairings(u.laplacian_trace)
    f_trace_term = np.zeros(u.domain.modes)
    return SpectralField(u.domain, lam ** (s + 1) * (-lam ** -2.0 * lap_bnd
                                                     - lam ** -(s + 1) * f_trace_term))
