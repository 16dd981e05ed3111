import numpy as np
import pytest

from fraclab import fd


def _errors(nodes):
    g = fd.UniformGrid((0.0,), (1.0,), (nodes,))
    x = g.axis(0)
    f = np.sin(3 * x)
    e1 = np.max(np.abs(fd.d1(f, 0, g.spacing[0]) - 3 * np.cos(3 * x)))
    e2 = np.max(np.abs(fd.d2(f, 0, g.spacing[0]) + 9 * np.sin(3 * x)))
    return e1, e2


def test_fourth_order_convergence():
    a = _errors(41)
    b = _errors(81)
    assert np.log2(a[0] / b[0]) > 3.7
    assert np.log2(a[1] / b[1]) > 3.5


def test_exact_on_quartics():
    g = fd.UniformGrid((-1.0, -1.0), (1.0, 2.0), (11, 13))
    X, Y = g.mesh()
    u = X ** 4 - 3 * X ** 2 * Y ** 2 + Y ** 3
    lap = 12 * X ** 2 - 6 * Y ** 2 - 6 * X ** 2 + 6 * Y
    assert np.allclose(fd.laplacian(u, g), lap, atol=1e-9)
    H = fd.hessian(u, g)
    assert np.allclose(H[0][1], -12 * X * Y, atol=1e-9)


def test_grid_validation_and_integration():
    with pytest.raises(ValueError):
        fd.UniformGrid((0.0,), (1.0,), (4,))
    with pytest.raises(ValueError):
        fd.UniformGrid((1.0,), (0.0,), (10,))
    g = fd.UniformGrid((0.0, 0.0), (2.0, 1.0), (21, 11))
    assert g.integrate(np.ones(g.shape)) == pytest.approx(2.0)


def test_interior_mask():
    m = fd.interior_mask((10, 10), 2)
    assert m.sum() == 36
