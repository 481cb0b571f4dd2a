import numpy as np
import pytest

from qchybrid.stencils import diff1, diff2


def _field(f, n=48, lo=-2.0, hi=2.0):
    z = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    Z = np.tile(z[:, None], (1, 8))
    return z, Z, (hi - lo) / n


@pytest.mark.parametrize("axis", [0, 1])
def test_first_derivative_exact_on_quadratics(axis):
    z, Z, h = _field(None)
    F = 3.0 - 1.5 * Z + 0.7 * Z**2
    expect = -1.5 + 1.4 * Z
    if axis == 1:
        F, expect = F.T.copy(), expect.T.copy()
    np.testing.assert_allclose(diff1(F, h, axis), expect, atol=1e-12)


def test_second_derivative_exact_on_cubics_interior():
    z, Z, h = _field(None)
    F = Z**3
    out = diff2(F, h, 0)
    np.testing.assert_allclose(out[2:-2], 6.0 * Z[2:-2], atol=1e-10)


def test_interior_fourth_order_convergence():
    errs = []
    for n in (64, 128):
        z = np.linspace(-np.pi, np.pi, n, endpoint=False) + np.pi / n
        F = np.tile(np.sin(z)[:, None], (1, 4))
        h = z[1] - z[0]
        d = diff1(F, h, 0)
        errs.append(np.abs(d[4:-4] - np.cos(z)[4:-4, None]).max())
    order = np.log2(errs[0] / errs[1])
    assert order > 3.7


def test_edge_second_order_convergence():
    errs = []
    for n in (64, 128):
        z = np.linspace(0.0, 1.0, n)
        F = np.tile(np.exp(z)[:, None], (1, 4))
        h = z[1] - z[0]
        d = diff1(F, h, 0)
        errs.append(abs(d[0, 0] - np.exp(z[0])))
    order = np.log2(errs[0] / errs[1])
    assert order > 1.8


def test_periodic_wraps_smoothly():
    n = 64
    z = np.linspace(0, 2 * np.pi, n, endpoint=False)
    F = np.tile(np.sin(z)[:, None], (1, 4))
    h = z[1] - z[0]
    d = diff1(F, h, 0, periodic=True)
    assert np.abs(d - np.cos(z)[:, None]).max() < 1e-5
    d2 = diff2(F, h, 0, periodic=True)
    assert np.abs(d2 + np.sin(z)[:, None]).max() < 1e-4
