"""Time evolution of the hybrid state by the canonical field equations

    dP/dt = + dH/dS        dS/dt = - dH/dP .

The integrator advances the complex field Psi = sqrt(P) exp(i S / hbar), in
which the pair of field equations is exactly

    i hbar dPsi/dt = [ -(hbar^2/2 m_q) d_q^2 - (hbar^2/2 m_x) d_x^2
                       + V(q,x,t) + Q_x[|Psi|^2] ] Psi,
    Q_x[P] = +(hbar^2/2 m_x) (d_x^2 sqrt P) / sqrt P ,

i.e. a Schroedinger equation in both coordinates plus a real state-dependent
potential that removes the quantum pressure from the classical coordinate
(taking the Madelung real/imaginary parts of the above reproduces the hybrid
continuity and modified Hamilton-Jacobi equations identically).

Why this representation: direct finite differencing of (ln P, S) is linearly
unstable around any localized density -- perturbations grow like
exp(sqrt(hbar/2m_q) |d_q ln P| k t), so refinement makes it worse.  In Psi the
perturbations are additive, the linear part is skew-Hermitian, and tail noise
is suppressed by the amplitude instead of amplified by 1/P.

Time stepping is classic RK4 on the method-of-lines system (spectral kinetic
term, pointwise potential term), which is stable for purely oscillatory
spectra when dt * |omega_max| < 2.8; the enforced bound
dt <= c_stab min(dq,dx)^2 min(m) / hbar with c_stab = 0.1 sits a factor ~3
inside that limit.  lambda is piecewise constant and changes only between
steps: spans are split at window edges, and step boundaries land on them
exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from . import errors
from .grid import GridSpec, HybridState, separability_defect, MASK_REL, FLOOR_REL
from .hamiltonian import HamiltonianParams, ensemble_energy
from .brackets import signal_integral
from .observables import Observable, classical_expectation, quantum_expectation
from .stencils import diff1, diff2

log = logging.getLogger(__name__)

#: CSV schema for run records (a trailing `solver` tag column is appended).
SCHEMA = (
    "t",
    "norm",
    "energy",
    "x_mean",
    "x_var",
    "px_mean",
    "px2",
    "q_mean",
    "q_var",
    "pq2",
    "separability_defect",
    "signal_integral",
    "d2x2_formula",
)

# fraction of |Psi|^2 allowed in the top fifth of the spectrum before the run
# is declared unresolved (forming caustic / grid-scale noise)
HIGH_K_BUDGET = 1e-7


@dataclass(frozen=True)
class IntegratorSpec:
    dt: float
    scheme: str = "rk4"
    renormalize_every: int = 100
    max_steps: int = 20_000_000
    c_stab: float = 0.1

    def __post_init__(self):
        if self.dt <= 0:
            raise errors.RangeError("dt must be positive")
        if self.scheme != "rk4":
            raise errors.RangeError(f"unknown scheme {self.scheme!r}")
        if self.renormalize_every < 1 or self.max_steps < 1:
            raise errors.RangeError("renormalize_every and max_steps must be positive")


def stability_limit(grid: GridSpec, params: HamiltonianParams, c_stab: float = 0.1) -> float:
    """Largest admissible dt: c_stab * min(dq,dx)^2 * min(m_q,m_x) / hbar."""
    return c_stab * min(grid.dq, grid.dx) ** 2 * min(params.m_q, params.m_x) / params.hbar


def _check_stability(grid, params, spec: IntegratorSpec, dt: float) -> None:
    bound = stability_limit(grid, params, spec.c_stab)
    if abs(dt) > bound * (1 + 1e-12):
        raise errors.StabilityBound(f"dt={dt} exceeds the stability bound {bound:.3e}")


class _PsiPropagator:
    """RK4 stepping of Psi with a frozen external potential grid."""

    def __init__(self, grid: GridSpec, params: HamiltonianParams, V: np.ndarray):
        self.grid = grid
        self.params = params
        self.V = V
        kq = 2.0 * np.pi * np.fft.fftfreq(grid.n_q, d=grid.dq)
        kx = 2.0 * np.pi * np.fft.fftfreq(grid.n_x, d=grid.dx)
        # kinetic angular frequencies hbar k^2 / 2m per mode
        self.omega = params.hbar * (
            kq[:, None] ** 2 / (2.0 * params.m_q) + kx[None, :] ** 2 / (2.0 * params.m_x)
        )
        self.qx_coef = params.hbar**2 / (2.0 * params.m_x)
        self.hbar = params.hbar

    def classicalizer(self, psi: np.ndarray) -> np.ndarray:
        """Q_x = (hbar^2/2 m_x)(d_x^2 sqrt P)/sqrt P, masked in the far tails.

        Evaluated from L = ln P as (hbar^2/2 m_x)(L_xx/2 + L_x^2/4): exact for
        Gaussian densities, bounded everywhere the mask keeps cells.
        """
        P = np.abs(psi)  # contiguous, much faster than strided real/imag parts
        P *= P
        pmax = P.max()
        L = np.log(P + pmax * FLOOR_REL)
        g = self.grid
        Lx = diff1(L, g.dx, 1, g.periodic)
        Q = diff2(L, g.dx, 1, g.periodic)
        Q *= 0.5
        Lx *= Lx
        Q += 0.25 * Lx
        Q *= self.qx_coef
        Q *= P >= pmax * MASK_REL
        return Q

    def rhs(self, psi: np.ndarray) -> np.ndarray:
        kin = sfft.fft2(psi)
        kin *= self.omega
        kin = sfft.ifft2(kin, overwrite_x=True)
        pot = self.classicalizer(psi)
        pot += self.V
        pot /= self.hbar
        kin += pot * psi
        kin *= -1j
        return kin

    def rk4(self, psi: np.ndarray, dt: float, n: int) -> np.ndarray:
        for _ in range(n):
            k1 = self.rhs(psi)
            k2 = self.rhs(psi + 0.5 * dt * k1)
            k3 = self.rhs(psi + 0.5 * dt * k2)
            k4 = self.rhs(psi + dt * k3)
            k2 += k3
            k2 *= 2.0
            k1 += k4
            k1 += k2
            k1 *= dt / 6.0
            psi = psi + k1
        return psi


def state_to_psi(state: HybridState, hbar: float) -> np.ndarray:
    return np.sqrt(state.P) * np.exp(1j * state.S / hbar)


def psi_to_state(psi: np.ndarray, grid: GridSpec, hbar: float) -> HybridState:
    """Materialize (P, S) from Psi with a density-guided phase unwrap.

    Each row is unwrapped (by summing principal-valued increments) relative to
    its own density ridge, and row anchors are chained through the column
    where two adjacent rows overlap at the highest density.  The walk
    therefore never crosses the phase-noise floor before reaching a resolved
    cell; a plain edge-first unwrap would pick up 2 pi slips inside the tails
    and leave spurious cross-row phase steps that masquerade as huge d_q S.
    S remains meaningless at the noise floor itself; those cells are excluded
    from quadratures by the state's tail mask.
    """
    P = psi.real**2 + psi.imag**2
    n_q = P.shape[0]
    # within-row cumulative principal increments
    dphx = np.angle(psi[:, 1:] * np.conj(psi[:, :-1]))
    R = np.zeros_like(P)
    np.cumsum(dphx, axis=1, out=R[:, 1:])
    jstar = np.argmax(P, axis=1)
    rel = R - np.take_along_axis(R, jstar[:, None], axis=1)
    # chain row anchors through the best-density link column of each row pair
    dphq = np.angle(psi[1:, :] * np.conj(psi[:-1, :]))
    jlink = np.argmax(np.minimum(P[:-1, :], P[1:, :]), axis=1)
    i0 = int(np.argmax(P.max(axis=1)))
    A = np.empty(n_q)
    A[i0] = float(np.angle(psi[i0, jstar[i0]]))
    for i in range(i0 + 1, n_q):
        l = jlink[i - 1]
        A[i] = A[i - 1] + rel[i - 1, l] + dphq[i - 1, l] - rel[i, l]
    for i in range(i0 - 1, -1, -1):
        l = jlink[i]
        A[i] = A[i + 1] + rel[i + 1, l] - dphq[i, l] - rel[i, l]
    return HybridState(grid, P, hbar * (rel + A[:, None]))


def _check_resolved(psi: np.ndarray, grid: GridSpec) -> None:
    if not np.isfinite(psi).all():
        raise errors.Instability("integrator produced non-finite fields")
    spec = np.abs(sfft.fft2(psi)) ** 2
    nq, nx = spec.shape
    bq = nq // 5
    bx = nx // 5
    top = spec[2 * bq : -2 * bq or None, :].sum() + spec[:, 2 * bx : -2 * bx or None].sum()
    frac = top / spec.sum()
    if frac > HIGH_K_BUDGET:
        raise errors.Instability(
            f"{frac:.1e} of the state occupies the top of the spectrum; "
            "phase caustic or unresolved dynamics, halting"
        )


def step(
    state: HybridState,
    params: HamiltonianParams,
    spec: IntegratorSpec,
    t: float = 0.0,
    dt: float | None = None,
) -> HybridState:
    """One RK4 step of size spec.dt (or `dt`, which may be negative for
    reversal checks).  No renormalization is applied."""
    h = spec.dt if dt is None else dt
    _check_stability(state.grid, params, spec, h)
    V = params.potential_values(state.grid, t)
    prop = _PsiPropagator(state.grid, params, V)
    psi = prop.rk4(state_to_psi(state, params.hbar), h, 1)
    if not np.isfinite(psi).all():
        raise errors.Instability("integrator produced non-finite fields")
    return psi_to_state(psi, state.grid, params.hbar)


@dataclass
class RunRecord:
    """Sampled time series of a simulation run plus bookkeeping logs."""

    times: np.ndarray
    columns: dict[str, np.ndarray]
    solver: str = "grid"
    renorm_log: list = field(default_factory=list)  # (step_index, factor)
    clamped_mass: float = 0.0
    final_state: HybridState | None = None
    final_moments: object = None  # set by the moments solver

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def x_second_moment(self) -> np.ndarray:
        return self.columns["x_var"] + self.columns["x_mean"] ** 2

    def column_names(self) -> list[str]:
        names = [c for c in SCHEMA]
        names += [c for c in self.columns if c not in SCHEMA]
        return names

    def to_csv(self, path) -> None:
        names = self.column_names()
        with open(path, "w") as fh:
            fh.write(",".join(names + ["solver"]) + "\n")
            for k in range(len(self.times)):
                row = [repr(float(self.columns[c][k])) for c in names]
                fh.write(",".join(row + [self.solver]) + "\n")

    def max_renorm_deviation(self) -> float:
        if not self.renorm_log:
            return 0.0
        return max(abs(f - 1.0) for _, f in self.renorm_log)


def standard_columns(state: HybridState, params: HamiltonianParams, t: float) -> dict[str, float]:
    g = state.grid
    P = state.P
    cell = g.cell
    Qm, Xm = g.meshes()
    Sq = diff1(state.S, g.dq, 0, g.periodic)
    Sx = diff1(state.S, g.dx, 1, g.periodic)
    L = state.log_density()
    Lq = diff1(L, g.dq, 0, g.periodic)
    mask = state.tail_mask()
    Pm = np.where(mask, P, 0.0)

    norm = float(P.sum() * cell)
    x_mean = float((P * Xm).sum() * cell)
    x2 = float((P * Xm * Xm).sum() * cell)
    q_mean = float((P * Qm).sum() * cell)
    q2 = float((P * Qm * Qm).sum() * cell)
    px_mean = float((Pm * Sx).sum() * cell)
    px2 = float((Pm * Sx * Sx).sum() * cell)
    pq2 = float((Pm * (Sq * Sq + 0.25 * params.hbar**2 * Lq * Lq)).sum() * cell)
    sig = signal_integral(state, params)
    return {
        "norm": norm,
        "energy": ensemble_energy(state, params, t),
        "x_mean": x_mean,
        "x_var": x2 - x_mean**2,
        "px_mean": px_mean,
        "px2": px2,
        "q_mean": q_mean,
        "q_var": q2 - q_mean**2,
        "pq2": pq2,
        "separability_defect": separability_defect(state),
        "signal_integral": sig,
        "d2x2_formula": 2.0 * px2 / params.m_x**2 + sig,
    }


def _sample_times(t0: float, t1: float, sample_dt: float, switches: list[float]) -> np.ndarray:
    times = set()
    k = 0
    t = t0
    while t < t1 - 1e-12:
        times.add(t)
        k += 1
        t = t0 + k * sample_dt
    times.add(t1)
    for s in switches:
        if t0 < s < t1:
            times.add(s)
    ordered = sorted(times)
    # merge samples that collide to floating-point jitter
    eps = 1e-9 * max(1.0, abs(t1 - t0))
    merged = [ordered[0]]
    for t in ordered[1:]:
        if t - merged[-1] > eps:
            merged.append(t)
    merged[-1] = t1
    return np.array(merged)


def evolve(
    state: HybridState,
    params: HamiltonianParams,
    spec: IntegratorSpec,
    t0: float,
    t1: float,
    probes: list[Observable] | None = None,
    sample_dt: float | None = None,
) -> RunRecord:
    """Integrate from t0 to t1, sampling every `sample_dt` (default 50 steps).

    Spans are split at interaction-window edges so the switch happens exactly
    between steps; within each sampling interval the step size is spec.dt
    shrunk to divide the interval evenly.
    """
    if t1 <= t0:
        raise errors.RangeError("evolve needs t1 > t0")
    _check_stability(state.grid, params, spec, spec.dt)
    probes = probes or []
    if sample_dt is None:
        sample_dt = 50 * spec.dt
    samples = _sample_times(t0, t1, sample_dt, params.switch_times())

    grid = state.grid
    hbar = params.hbar
    psi = state_to_psi(state, hbar)
    times = []
    rows = []
    renorm_log = []
    steps_done = 0
    since_renorm = 0

    def record(t, psi_now):
        st = psi_to_state(psi_now, grid, hbar)
        cols = standard_columns(st, params, t)
        for p in probes:
            key = p.label or str(p.descriptor)
            cols[key] = (
                classical_expectation(st, p) if p.is_classical else quantum_expectation(st, p)
            )
        times.append(t)
        rows.append(cols)
        return st

    current = record(t0, psi)
    for a, b in zip(samples[:-1], samples[1:]):
        V = params.potential_values(grid, 0.5 * (a + b))  # lambda constant inside (a, b)
        prop = _PsiPropagator(grid, params, V)
        n = max(1, int(np.ceil((b - a) / spec.dt - 1e-12)))
        h = (b - a) / n
        if steps_done + n > spec.max_steps:
            raise errors.StepFailure(f"step budget {spec.max_steps} exhausted")
        done = 0
        while done < n:
            chunk = min(n - done, spec.renormalize_every - since_renorm)
            psi = prop.rk4(psi, h, chunk)
            done += chunk
            steps_done += chunk
            since_renorm += chunk
            if since_renorm >= spec.renormalize_every:
                a = np.abs(psi)
                a *= a
                total = float(a.sum() * grid.cell)
                psi /= np.sqrt(total)
                renorm_log.append((steps_done, total))
                since_renorm = 0
        _check_resolved(psi, grid)
        current = record(b, psi)

    columns = {"t": np.array(times)}
    columns.update({name: np.array([r[name] for r in rows]) for name in rows[0]})
    return RunRecord(
        times=np.array(times),
        columns=columns,
        solver="grid",
        renorm_log=renorm_log,
        final_state=current,
    )
