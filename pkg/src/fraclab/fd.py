"""Fourth-order finite differences on uniform tensor grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_D1_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_EDGE = (np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
            np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0)
_D2_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_EDGE = (np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0,
            np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0)


@dataclass(frozen=True)
class UniformGrid:
    """Closed tensor grid with ``shape[i]`` nodes on ``[lower[i], upper[i]]``."""

    lower: tuple
    upper: tuple
    shape: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        shape = tuple(int(v) for v in np.atleast_1d(self.shape))
        if not len(lower) == len(upper) == len(shape):
            raise ValueError("lower, upper and shape must have equal lengths")
        if any(u <= l for l, u in zip(lower, upper)):
            raise ValueError("upper bounds must exceed lower bounds")
        if any(m < 6 for m in shape):
            raise ValueError("fourth-order stencils need at least 6 nodes per axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "shape", shape)

    @property
    def ndim(self):
        return len(self.shape)

    @property
    def spacing(self):
        return tuple((u - l) / (m - 1) for l, u, m in zip(self.lower, self.upper, self.shape))

    def axis(self, i):
        return np.linspace(self.lower[i], self.upper[i], self.shape[i])

    def mesh(self):
        return np.meshgrid(*[self.axis(i) for i in range(self.ndim)], indexing="ij")

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def trapezoid_weights(self):
        w = np.ones(())
        for i in range(self.ndim):
            wi = np.full(self.shape[i], self.spacing[i])
            wi[[0, -1]] /= 2
            w = np.multiply.outer(w, wi)
        return w

    def integrate(self, values):
        return np.sum(self.trapezoid_weights() * values)


def _apply(f, axis, h, interior, edges, order):
    f = np.moveaxis(np.asarray(f), axis, 0)
    n = f.shape[0]
    out = np.zeros(f.shape, dtype=np.result_type(f, float))
    for k, c in enumerate(interior):
        out[2:n - 2] += c * f[k:n - 4 + k]
    for row, st in enumerate(edges):
        for k, c in enumerate(st):
            out[row] += c * f[k]
            sign = -1.0 if order == 1 else 1.0
            out[n - 1 - row] += sign * c * f[n - 1 - k]
    return np.moveaxis(out / h ** order, 0, axis)


def d1(f, axis, h):
    """First derivative along ``axis`` with one-sided closures at the ends."""
    return _apply(f, axis, h, _D1_INTERIOR, _D1_EDGE, 1)


def d2(f, axis, h):
    """Second derivative along ``axis`` with one-sided closures at the ends."""
    return _apply(f, axis, h, _D2_INTERIOR, _D2_EDGE, 2)


def gradient(f, grid):
    return [d1(f, i, grid.spacing[i]) for i in range(grid.ndim)]


def laplacian(f, grid):
    return sum(d2(f, i, grid.spacing[i]) for i in range(grid.ndim))


def hessian(f, grid):
    """Symmetric matrix (nested lists) of second derivatives."""
    n = grid.ndim
    H = [[None] * n for _ in range(n)]
    for i in range(n):
        H[i][i] = d2(f, i, grid.spacing[i])
        for j in range(i + 1, n):
            H[i][j] = H[j][i] = d1(d1(f, i, grid.spacing[i]), j, grid.spacing[j])
    return H


def interior_mask(shape, margin):
    """Boolean mask excluding ``margin`` nodes next to every face."""
    mask = np.zeros(shape, dtype=bool)
    mask[tuple(slice(margin, m - margin) for m in shape)] = True
    return mask
