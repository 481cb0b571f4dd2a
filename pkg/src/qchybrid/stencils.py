"""Finite-difference stencils for the grid kernels.

Interior points use 4th-order central differences; the outermost two rows of a
truncated grid fall back to 2nd-order one-sided / narrow-central stencils.
Periodic grids wrap the 4th-order stencil everywhere.

These routines are the single source of derivatives for the whole toolkit so
that energies, variational derivatives and the integrator share one
discretization (several conservation checks rely on that bookkeeping).
"""

from __future__ import annotations

import numpy as np


def _sl(axis: int, s: slice | int):
    """Index tuple selecting `s` along `axis` of a 2D array."""
    return (s, slice(None)) if axis == 0 else (slice(None), s)


def diff1(f: np.ndarray, h: float, axis: int, periodic: bool = False) -> np.ndarray:
    """First derivative along `axis` with spacing `h`."""
    if periodic:
        fp1 = np.roll(f, -1, axis)
        fm1 = np.roll(f, 1, axis)
        fp2 = np.roll(f, -2, axis)
        fm2 = np.roll(f, 2, axis)
        return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)

    out = np.empty_like(f)
    c = 1.0 / (12.0 * h)
    interior = _sl(axis, slice(2, -2))
    out[interior] = c * (
        f[_sl(axis, slice(0, -4))]
        - 8.0 * f[_sl(axis, slice(1, -3))]
        + 8.0 * f[_sl(axis, slice(3, -1))]
        - f[_sl(axis, slice(4, None))]
    )
    d = 1.0 / (2.0 * h)
    out[_sl(axis, 0)] = d * (-3.0 * f[_sl(axis, 0)] + 4.0 * f[_sl(axis, 1)] - f[_sl(axis, 2)])
    out[_sl(axis, 1)] = d * (f[_sl(axis, 2)] - f[_sl(axis, 0)])
    out[_sl(axis, -2)] = d * (f[_sl(axis, -1)] - f[_sl(axis, -3)])
    out[_sl(axis, -1)] = d * (3.0 * f[_sl(axis, -1)] - 4.0 * f[_sl(axis, -2)] + f[_sl(axis, -3)])
    return out


def diff2(f: np.ndarray, h: float, axis: int, periodic: bool = False) -> np.ndarray:
    """Second derivative along `axis` with spacing `h`."""
    if periodic:
        fp1 = np.roll(f, -1, axis)
        fm1 = np.roll(f, 1, axis)
        fp2 = np.roll(f, -2, axis)
        fm2 = np.roll(f, 2, axis)
        return (-fm2 + 16.0 * fm1 - 30.0 * f + 16.0 * fp1 - fp2) / (12.0 * h * h)

    out = np.empty_like(f)
    c = 1.0 / (12.0 * h * h)
    interior = _sl(axis, slice(2, -2))
    out[interior] = c * (
        -f[_sl(axis, slice(0, -4))]
        + 16.0 * f[_sl(axis, slice(1, -3))]
        - 30.0 * f[_sl(axis, slice(2, -2))]
        + 16.0 * f[_sl(axis, slice(3, -1))]
        - f[_sl(axis, slice(4, None))]
    )
    d = 1.0 / (h * h)
    out[_sl(axis, 0)] = d * (
        2.0 * f[_sl(axis, 0)] - 5.0 * f[_sl(axis, 1)] + 4.0 * f[_sl(axis, 2)] - f[_sl(axis, 3)]
    )
    out[_sl(axis, 1)] = d * (f[_sl(axis, 0)] - 2.0 * f[_sl(axis, 1)] + f[_sl(axis, 2)])
    out[_sl(axis, -2)] = d * (f[_sl(axis, -3)] - 2.0 * f[_sl(axis, -2)] + f[_sl(axis, -1)])
    out[_sl(axis, -1)] = d * (
        2.0 * f[_sl(axis, -1)] - 5.0 * f[_sl(axis, -2)] + 4.0 * f[_sl(axis, -3)] - f[_sl(axis, -4)]
    )
    return out
