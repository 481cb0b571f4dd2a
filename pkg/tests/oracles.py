"""Independent oracles for the test suite.

Everything here is deliberately built on different machinery than the package:
analytic derivative formulas instead of grid stencils, FFT spectral calculus
instead of finite differences, split-step propagation instead of RK4, plain
Riemann sums on purpose-built fine grids.  Tests compare package results
against these, never against the package itself.
"""

from __future__ import annotations

import numpy as np


class AnalyticMixture:
    """Gaussian mixture with closed-form fields and log-derivatives."""

    def __init__(self, means, sigmas, weights):
        self.parts = []
        for m, s, w in zip(means, sigmas, weights):
            s = np.asarray(s, float)
            self.parts.append((np.asarray(m, float), np.linalg.inv(s), np.linalg.det(s), w))

    def density(self, Q, X):
        P = np.zeros_like(Q)
        for m, lam, det, w in self.parts:
            dq, dx = Q - m[0], X - m[1]
            quad = lam[0, 0] * dq**2 + 2 * lam[0, 1] * dq * dx + lam[1, 1] * dx**2
            P += w * np.exp(-0.5 * quad) / (2 * np.pi * np.sqrt(det))
        return P

    def fields(self, Q, X):
        """P and its q/x first derivatives plus d2P/dqdx-free combos needed below."""
        P = np.zeros_like(Q)
        Pq = np.zeros_like(Q)
        Px = np.zeros_like(Q)
        Pqq = np.zeros_like(Q)
        Pqx = np.zeros_like(Q)
        for m, lam, det, w in self.parts:
            dq, dx = Q - m[0], X - m[1]
            quad = lam[0, 0] * dq**2 + 2 * lam[0, 1] * dq * dx + lam[1, 1] * dx**2
            Nk = w * np.exp(-0.5 * quad) / (2 * np.pi * np.sqrt(det))
            gq = -(lam[0, 0] * dq + lam[0, 1] * dx)
            gx = -(lam[0, 1] * dq + lam[1, 1] * dx)
            P += Nk
            Pq += Nk * gq
            Px += Nk * gx
            Pqq += Nk * (gq * gq - lam[0, 0])
            Pqx += Nk * (gq * gx - lam[0, 1])
        return P, Pq, Px, Pqq, Pqx


def fine_grid(half_q=12.0, half_x=12.0, n=2400):
    q = (np.arange(n) + 0.5) * (2 * half_q / n) - half_q
    x = (np.arange(n) + 0.5) * (2 * half_x / n) - half_x
    Q, X = np.meshgrid(q, x, indexing="ij")
    return Q, X, (2 * half_q / n) * (2 * half_x / n)


def signal_integral_oracle(mixture: AnalyticMixture, hbar=1.0, m_q=1.0, m_x=1.0, n=2400):
    """(hbar^2/4 m_x m_q) int P x d_x[(d_q ln P)^2] with analytic derivatives."""
    Q, X, cell = fine_grid(n=n)
    P, Pq, Px, Pqq, Pqx = mixture.fields(Q, X)
    keep = P > P.max() * 1e-13
    Ps = np.where(keep, P, 1.0)
    Lq = Pq / Ps
    Lx = Px / Ps
    Lqx = Pqx / Ps - Lq * Lx
    integrand = np.where(keep, P * X * 2.0 * Lq * Lqx, 0.0)
    return hbar**2 / (4 * m_x * m_q) * integrand.sum() * cell


def separability_defect_oracle(mixture: AnalyticMixture, n=2400):
    Q, X, cell = fine_grid(n=n)
    P = mixture.density(Q, X)
    dq = Q[1, 0] - Q[0, 0]
    dx = X[0, 1] - X[0, 0]
    Pq = P.sum(axis=1) * dx
    Px = P.sum(axis=0) * dq
    return np.abs(P - np.outer(Pq, Px)).sum() * cell


def gaussian_energy_oracle(sigma, mean, s_grad, s_hess, params_tuple, n=2400):
    """Ensemble energy of a Gaussian/quadratic-phase state by analytic fields.

    params_tuple = (m_q, m_x, hbar, vq_coeffs, vx_coeffs, lam).
    """
    m_q, m_x, hbar, vq, vx, lam = params_tuple
    Q, X, cell = fine_grid(n=n)
    mix = AnalyticMixture([mean], [sigma], [1.0])
    P, Pq, Px, _, _ = mix.fields(Q, X)
    keep = P > P.max() * 1e-13
    Lq = np.where(keep, Pq / np.where(keep, P, 1.0), 0.0)
    A = np.asarray(s_hess, float)
    g = np.asarray(s_grad, float)
    dq, dx = Q - mean[0], X - mean[1]
    Sq = g[0] + A[0, 0] * dq + A[0, 1] * dx
    Sx = g[1] + A[0, 1] * dq + A[1, 1] * dx
    V = (
        vq[0] + vq[1] * Q + vq[2] * Q**2
        + vx[0] + vx[1] * X + vx[2] * X**2
        + lam * Q * X
    )
    dens = P * (Sq**2 / (2 * m_q) + Sx**2 / (2 * m_x) + hbar**2 / (8 * m_q) * Lq**2 + V)
    return float(np.where(keep, dens, 0.0).sum() * cell)


# ---------------------------------------------------------------------------
# spectral-calculus expectation values via psi = sqrt(P) exp(iS/hbar)
# ---------------------------------------------------------------------------

def quantum_expectation_psi(state, name: str, hbar=1.0, m_q=1.0, v_q=(0.0, 0.0, 0.0)):
    """Wavefunction-form expectation with FFT derivatives (independent path)."""
    g = state.grid
    psi = np.sqrt(state.P) * np.exp(1j * state.S / hbar)
    kq = 2 * np.pi * np.fft.fftfreq(g.n_q, d=g.dq)
    Qm, _ = g.meshes()
    cell = g.cell
    if name == "position":
        return float((np.abs(psi) ** 2 * Qm).sum() * cell)
    if name == "position_squared":
        return float((np.abs(psi) ** 2 * Qm**2).sum() * cell)
    dpsi = np.fft.ifft(1j * kq[:, None] * np.fft.fft(psi, axis=0), axis=0)
    if name == "momentum":
        val = (-1j * hbar * np.conj(psi) * dpsi).sum() * cell
        return float(val.real)
    if name == "momentum_squared":
        return float(hbar**2 * (np.abs(dpsi) ** 2).sum() * cell)
    if name == "kinetic_energy":
        return float(hbar**2 * (np.abs(dpsi) ** 2).sum() * cell / (2 * m_q))
    if name == "potential":
        vq = v_q[0] + v_q[1] * g.q + v_q[2] * g.q**2
        return float((np.abs(psi) ** 2 * vq[:, None]).sum() * cell)
    raise ValueError(name)


# ---------------------------------------------------------------------------
# reference integrators for the product-evolution oracle
# ---------------------------------------------------------------------------

class SplitStepReference:
    """1D Schroedinger propagation, second-order Strang splitting on a
    periodic FFT grid (independent of the package integrator)."""

    def __init__(self, xs, v, m=1.0, hbar=1.0):
        self.xs = xs
        self.dx = xs[1] - xs[0]
        self.k = 2 * np.pi * np.fft.fftfreq(len(xs), d=self.dx)
        self.v = v
        self.m = m
        self.hbar = hbar

    def evolve(self, psi, t, dt=2e-4):
        n = max(1, int(round(t / dt)))
        h = t / n
        half_v = np.exp(-0.5j * self.v * h / self.hbar)
        kin = np.exp(-0.5j * self.hbar * self.k**2 * h / self.m)
        for _ in range(n):
            psi = half_v * psi
            psi = np.fft.ifft(kin * np.fft.fft(psi))
            psi = half_v * psi
        return psi


def boosted_density(xs, density0, velocity, t):
    """Classical free transport of a rigidly boosted profile."""
    return np.interp(xs - velocity * t, xs, density0, left=0.0, right=0.0)


def second_difference(series, h):
    return (series[2:] - 2 * series[1:-1] + series[:-2]) / h**2
