"""Exact reduced dynamics for Gaussian densities with quadratic phase.

For quadratic potentials the hybrid field equations close on the ansatz

    P = N(mean, Sigma),    S = g . (u - mean) + 1/2 (u - mean)^T A (u - mean)

(u = (q, x); the additive constant of S carries no observable content and is
not tracked).  Substituting the ansatz into the (ln P, S) field equations and
matching polynomial coefficients up to quadratic order gives the closed flow

    d mean / dt  =  W g
    d g / dt     = -(K mean + b)
    d Sigma / dt =  W A Sigma + Sigma A W
    d A / dt     = -A W A - K + (hbar^2 / 4 m_q) Lam E_q Lam

with W = diag(1/m_q, 1/m_x), Lam = Sigma^-1, E_q = diag(1, 0), and the
quadratic potential V = 1/2 u^T K u + b.u + const.  The last term of dA/dt is
the quantum-potential feedback; it acts on the classical block only through
the correlation Lam_qx, which is the mechanism behind the signaling
experiments.  Closure against the grid solver is verified by test, not
assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .grid import GridSpec, HybridState, hybrid_state
from .hamiltonian import HamiltonianParams
from .stencils import diff1

E_Q = np.array([[1.0, 0.0], [0.0, 0.0]])


@dataclass(frozen=True)
class GaussianMoments:
    mean: np.ndarray   # (q_bar, x_bar)
    sigma: np.ndarray  # 2x2 SPD covariance
    s_grad: np.ndarray  # linear phase coefficients about the mean
    s_hess: np.ndarray  # symmetric quadratic phase coefficients

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, float).reshape(2))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, float).reshape(2, 2))
        object.__setattr__(self, "s_grad", np.asarray(self.s_grad, float).reshape(2))
        object.__setattr__(self, "s_hess", np.asarray(self.s_hess, float).reshape(2, 2))
        for arr in (self.mean, self.sigma, self.s_grad, self.s_hess):
            if not np.isfinite(arr).all():
                raise errors.RangeError("moment parameters must be finite")
        self.check_positive_definite()

    def check_positive_definite(self) -> None:
        s = self.sigma
        if not (s[0, 0] > 0 and s[1, 1] > 0 and np.linalg.det(s) > 0):
            raise errors.RangeError("Sigma must be positive-definite")

    def precision(self) -> np.ndarray:
        return np.linalg.inv(self.sigma)

    # moment-space expectation values -----------------------------------------

    def px_moments(self) -> tuple[float, float]:
        asa = self.s_hess @ self.sigma @ self.s_hess
        return float(self.s_grad[1]), float(self.s_grad[1] ** 2 + asa[1, 1])

    def pq2(self, hbar: float) -> float:
        asa = self.s_hess @ self.sigma @ self.s_hess
        lam = self.precision()
        return float(self.s_grad[0] ** 2 + asa[0, 0] + 0.25 * hbar**2 * lam[0, 0])


def gaussian_moments(
    mean=(0.0, 0.0), sigma=((1.0, 0.0), (0.0, 1.0)), s_grad=(0.0, 0.0), s_hess=((0.0, 0.0), (0.0, 0.0))
) -> GaussianMoments:
    return GaussianMoments(np.array(mean), np.array(sigma), np.array(s_grad), np.array(s_hess))


def moments_to_state(m: GaussianMoments, grid: GridSpec) -> HybridState:
    """Realize the ansatz on a grid (needs >= 6 sigma coverage around the mean)."""
    sd_q = np.sqrt(m.sigma[0, 0])
    sd_x = np.sqrt(m.sigma[1, 1])
    if (
        m.mean[0] - 6 * sd_q < grid.q_min
        or m.mean[0] + 6 * sd_q > grid.q_max
        or m.mean[1] - 6 * sd_x < grid.x_min
        or m.mean[1] + 6 * sd_x > grid.x_max
    ):
        raise errors.DomainTooSmall("grid covers fewer than 6 standard deviations")
    Qm, Xm = grid.meshes()
    dq = Qm - m.mean[0]
    dx = Xm - m.mean[1]
    lam = m.precision()
    quad = lam[0, 0] * dq * dq + 2 * lam[0, 1] * dq * dx + lam[1, 1] * dx * dx
    P = np.exp(-0.5 * quad) / (2 * np.pi * np.sqrt(np.linalg.det(m.sigma)))
    A = m.s_hess
    S = m.s_grad[0] * dq + m.s_grad[1] * dx
    S += 0.5 * A[0, 0] * dq * dq + A[0, 1] * dq * dx + 0.5 * A[1, 1] * dx * dx
    return hybrid_state(grid, P, S)


def state_to_moments(state: HybridState) -> GaussianMoments:
    """Fit ansatz parameters from grid quadratures (exact for ansatz states)."""
    g = state.grid
    P = state.P
    cell = g.cell
    Qm, Xm = g.meshes()
    mean = np.array([(P * Qm).sum(), (P * Xm).sum()]) * cell
    dq = Qm - mean[0]
    dx = Xm - mean[1]
    sigma = np.array(
        [
            [(P * dq * dq).sum(), (P * dq * dx).sum()],
            [(P * dx * dq).sum(), (P * dx * dx).sum()],
        ]
    ) * cell
    Sq = diff1(state.S, g.dq, 0, g.periodic)
    Sx = diff1(state.S, g.dx, 1, g.periodic)
    grad = np.array([(P * Sq).sum(), (P * Sx).sum()]) * cell
    m_mat = np.array(
        [
            [(P * dq * (Sq - grad[0])).sum(), (P * dq * (Sx - grad[1])).sum()],
            [(P * dx * (Sq - grad[0])).sum(), (P * dx * (Sx - grad[1])).sum()],
        ]
    ) * cell
    A = np.linalg.inv(sigma) @ m_mat
    A = 0.5 * (A + A.T)
    return GaussianMoments(mean, sigma, grad, A)


# ---------------------------------------------------------------------------
# closed moment flow
# ---------------------------------------------------------------------------

def _quadratic_parts(params: HamiltonianParams, lam: float):
    pot = params.potential
    if not pot.is_quadratic:
        raise errors.NonQuadratic("moment dynamics requires polynomial/bilinear potentials")
    aq0, aq1, aq2 = pot.v_q
    ax0, ax1, ax2 = pot.v_x
    K = np.array([[2.0 * aq2, lam], [lam, 2.0 * ax2]])
    b = np.array([aq1, ax1])
    const = aq0 + ax0
    return K, b, const


def derive_moment_flow(params: HamiltonianParams):
    """Return flow(t, m) -> (d_mean, d_sigma, d_grad, d_hess)."""
    _quadratic_parts(params, 0.0)  # validate potential shape once
    W = np.diag([1.0 / params.m_q, 1.0 / params.m_x])
    hb2_wq_4 = params.hbar**2 / (4.0 * params.m_q)

    def flow(t: float, m: GaussianMoments):
        K, b, _ = _quadratic_parts(params, params.lambda_at(t))
        lam_mat = m.precision()
        A = m.s_hess
        d_mean = W @ m.s_grad
        d_grad = -(K @ m.mean + b)
        was = W @ A @ m.sigma
        d_sigma = was + was.T
        d_hess = -(A @ W @ A) - K + hb2_wq_4 * (lam_mat @ E_Q @ lam_mat)
        return d_mean, d_sigma, d_grad, d_hess

    return flow


def _add(m: GaussianMoments, deriv, h: float) -> GaussianMoments:
    d_mean, d_sigma, d_grad, d_hess = deriv
    obj = object.__new__(GaussianMoments)
    object.__setattr__(obj, "mean", m.mean + h * d_mean)
    object.__setattr__(obj, "sigma", m.sigma + h * d_sigma)
    object.__setattr__(obj, "s_grad", m.s_grad + h * d_grad)
    object.__setattr__(obj, "s_hess", m.s_hess + h * d_hess)
    return obj


def _rk4_moment_step(flow, t: float, m: GaussianMoments, h: float) -> GaussianMoments:
    k1 = flow(t, m)
    k2 = flow(t + 0.5 * h, _add(m, k1, 0.5 * h))
    k3 = flow(t + 0.5 * h, _add(m, k2, 0.5 * h))
    k4 = flow(t + h, _add(m, k3, h))
    combo = tuple(
        (a + 2.0 * b + 2.0 * c + d) / 6.0 for a, b, c, d in zip(k1, k2, k3, k4)
    )
    return _add(m, combo, h)


def _is_pd(m: GaussianMoments) -> bool:
    s = m.sigma
    return bool(s[0, 0] > 0 and s[1, 1] > 0 and np.linalg.det(s) > 0)


def advance_moments(
    flow, m: GaussianMoments, t: float, span: float, dt: float
) -> GaussianMoments:
    """Advance by `span` in steps of at most `dt`, halving rejected steps.

    A step is rejected when Sigma loses positive-definiteness; after 20
    consecutive halvings the integration aborts.
    """
    remaining = span
    while remaining > 1e-15 * max(1.0, abs(span)):
        h = min(dt, remaining)
        halvings = 0
        while True:
            trial = _rk4_moment_step(flow, t, m, h)
            if _is_pd(trial):
                break
            halvings += 1
            if halvings > 20:
                raise errors.StepFailure("moment step rejected after 20 halvings")
            h *= 0.5
        m = trial
        t += h
        remaining -= h
    return m


def evolve_moments(
    m: GaussianMoments, params: HamiltonianParams, dt: float, n: int, t0: float = 0.0
) -> list[GaussianMoments]:
    """n fixed-cadence RK4 steps of the moment flow; returns n+1 snapshots."""
    flow = derive_moment_flow(params)
    out = [m]
    t = t0
    for _ in range(n):
        m = advance_moments(flow, m, t, dt, dt)
        t += dt
        out.append(m)
    return out


def moment_energy(m: GaussianMoments, params: HamiltonianParams, t: float) -> float:
    K, b, const = _quadratic_parts(params, params.lambda_at(t))
    p1x, p2x = m.px_moments()
    ev = 0.5 * (np.trace(K @ m.sigma) + m.mean @ K @ m.mean) + b @ m.mean + const
    return float(
        m.pq2(params.hbar) / (2.0 * params.m_q) + p2x / (2.0 * params.m_x) + ev
    )


def evolve_moments_record(
    m: GaussianMoments,
    params: HamiltonianParams,
    grid: GridSpec,
    t0: float,
    t1: float,
    sample_dt: float,
    dt: float | None = None,
):
    """Moment trajectory sampled like the grid solver, as a RunRecord.

    Quadrature-only diagnostics (separability defect, signal integral) are
    evaluated on the grid realization of the moments at each sample time; the
    rest comes from closed moment formulas.  Emitted with solver = "moments".
    """
    from .brackets import signal_integral
    from .dynamics import RunRecord, _sample_times
    from .grid import separability_defect

    if t1 <= t0:
        raise errors.RangeError("evolve needs t1 > t0")
    if dt is None:
        dt = sample_dt / 20.0
    flow = derive_moment_flow(params)
    samples = _sample_times(t0, t1, sample_dt, params.switch_times())

    times = []
    rows = []
    state = None
    cur = m
    for k, t in enumerate(samples):
        if k > 0:
            span = t - samples[k - 1]
            cur = advance_moments(flow, cur, samples[k - 1], span, dt)
        state = moments_to_state(cur, grid)
        p1x, p2x = cur.px_moments()
        sig = signal_integral(state, params)
        rows.append(
            {
                "norm": 1.0,
                "energy": moment_energy(cur, params, t),
                "x_mean": float(cur.mean[1]),
                "x_var": float(cur.sigma[1, 1]),
                "px_mean": p1x,
                "px2": p2x,
                "q_mean": float(cur.mean[0]),
                "q_var": float(cur.sigma[0, 0]),
                "pq2": cur.pq2(params.hbar),
                "separability_defect": separability_defect(state),
                "signal_integral": sig,
                "d2x2_formula": 2.0 * p2x / params.m_x**2 + sig,
            }
        )
        times.append(t)

    columns = {"t": np.array(times)}
    columns.update({name: np.array([r[name] for r in rows]) for name in rows[0]})
    return RunRecord(
        times=np.array(times),
        columns=columns,
        solver="moments",
        final_state=state,
        final_moments=cur,
    )
