"""Ensemble Hamiltonian of the hybrid model and its variational derivatives.

    H[P,S] = int dq dx P [ (d_q S)^2 / 2 m_q + (d_x S)^2 / 2 m_x
                           + (hbar^2 / 8 m_q) (d_q ln P)^2 + V(q,x) ]

with V = V_q(q) + V_x(x) + lambda(t) * V_qx(q,x).  The hbar^2 term lives only
in the quantum coordinate q; its absence in x is what makes the x-sector
classical.

The variational derivatives returned here are the *exact* derivatives of the
discretized functional (stencil adjoints included), so the canonical flow they
generate conserves the discrete energy and mass to time-integration accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import errors
from .grid import GridSpec, HybridState
from .stencils import diff1, diff2

Poly2 = tuple[float, float, float]  # a0 + a1 z + a2 z^2


@dataclass(frozen=True)
class PotentialSpec:
    """Potential decomposition V_q(q) + V_x(x) + lambda(t) * shape(q,x).

    v_q / v_x are quadratic polynomials (a0, a1, a2) or tables on the matching
    axis; the interaction shape defaults to the bilinear q*x and may be
    replaced by a full-grid table.  The interaction strength lambda comes from
    the schedule on :class:`HamiltonianParams`.
    """

    v_q: Poly2 | np.ndarray = (0.0, 0.0, 0.0)
    v_x: Poly2 | np.ndarray = (0.0, 0.0, 0.0)
    v_qx: np.ndarray | None = None  # None -> bilinear q*x

    def __post_init__(self):
        for name in ("v_q", "v_x"):
            v = getattr(self, name)
            if not isinstance(v, np.ndarray):
                if len(v) != 3 or not all(np.isfinite(v)):
                    raise errors.RangeError(f"{name} polynomial must be 3 finite coefficients")

    def _axis_values(self, v, axis_points: np.ndarray, name: str) -> np.ndarray:
        if isinstance(v, np.ndarray):
            if v.shape != axis_points.shape:
                raise errors.RangeError(f"tabulated {name} does not match the grid axis")
            return v
        a0, a1, a2 = v
        return a0 + a1 * axis_points + a2 * axis_points**2

    def vq_values(self, grid: GridSpec) -> np.ndarray:
        return self._axis_values(self.v_q, grid.q, "v_q")

    def vx_values(self, grid: GridSpec) -> np.ndarray:
        return self._axis_values(self.v_x, grid.x, "v_x")

    def vqx_shape(self, grid: GridSpec) -> np.ndarray:
        if self.v_qx is None:
            return np.outer(grid.q, grid.x)
        if self.v_qx.shape != (grid.n_q, grid.n_x):
            raise errors.RangeError("tabulated v_qx does not match the grid")
        return self.v_qx

    @property
    def is_quadratic(self) -> bool:
        """True when the moment (Gaussian) solver can represent this potential."""
        return (
            not isinstance(self.v_q, np.ndarray)
            and not isinstance(self.v_x, np.ndarray)
            and self.v_qx is None
        )

    def vx_is_flat(self) -> bool:
        if isinstance(self.v_x, np.ndarray):
            return bool(np.ptp(self.v_x) == 0.0)
        return self.v_x[1] == 0.0 and self.v_x[2] == 0.0


Window = tuple[float, float, float]  # (t_start, t_end, lambda)


@dataclass(frozen=True)
class HamiltonianParams:
    """Masses, hbar, potential decomposition and the interaction on/off schedule."""

    m_q: float = 1.0
    m_x: float = 1.0
    hbar: float = 1.0
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    interaction_schedule: tuple[Window, ...] = ()

    def __post_init__(self):
        if self.m_q <= 0 or self.m_x <= 0 or self.hbar <= 0:
            raise errors.RangeError("masses and hbar must be positive")
        windows = tuple(tuple(float(v) for v in w) for w in self.interaction_schedule)
        object.__setattr__(self, "interaction_schedule", windows)
        last_end = -np.inf
        for t0, t1, _lam in windows:
            if t1 <= t0:
                raise errors.RangeError("schedule windows need t_end > t_start")
            if t0 < last_end:
                raise errors.RangeError("schedule windows must be time-ordered, non-overlapping")
            last_end = t1

    def lambda_at(self, t: float) -> float:
        """Interaction strength at time t (0 outside every window).

        Windows are half-open [t_start, t_end): at the switch-off instant the
        interaction is already off.
        """
        for t0, t1, lam in self.interaction_schedule:
            if t0 <= t < t1:
                return lam
        return 0.0

    def switch_times(self) -> list[float]:
        out: list[float] = []
        for t0, t1, _ in self.interaction_schedule:
            out.extend((t0, t1))
        return out

    def potential_values(self, grid: GridSpec, t: float) -> np.ndarray:
        p = self.potential
        V = p.vq_values(grid)[:, None] + p.vx_values(grid)[None, :]
        lam = self.lambda_at(t)
        if lam != 0.0:
            V = V + lam * p.vqx_shape(grid)
        return V

    # common rebindings used by branches / sweeps
    def with_m_q(self, m_q: float) -> "HamiltonianParams":
        return HamiltonianParams(m_q, self.m_x, self.hbar, self.potential, self.interaction_schedule)

    def with_v_q(self, v_q) -> "HamiltonianParams":
        pot = PotentialSpec(v_q, self.potential.v_x, self.potential.v_qx)
        return HamiltonianParams(self.m_q, self.m_x, self.hbar, pot, self.interaction_schedule)

    def with_schedule(self, schedule) -> "HamiltonianParams":
        return HamiltonianParams(self.m_q, self.m_x, self.hbar, self.potential, tuple(schedule))


# ---------------------------------------------------------------------------
# energy and variational derivatives
# ---------------------------------------------------------------------------

def fisher_field(state: HybridState) -> np.ndarray:
    """(d_q ln P)^2 on unmasked cells, 0 on the far tails."""
    g = state.grid
    L = state.log_density()
    Lq = diff1(L, g.dq, 0, g.periodic)
    return np.where(state.tail_mask(), Lq * Lq, 0.0)


def ensemble_energy(state: HybridState, params: HamiltonianParams, t: float = 0.0) -> float:
    """H[P,S] by grid quadrature."""
    g = state.grid
    P, S = state.P, state.S
    Sq = diff1(S, g.dq, 0, g.periodic)
    Sx = diff1(S, g.dx, 1, g.periodic)
    dens = P * (
        Sq * Sq / (2.0 * params.m_q)
        + Sx * Sx / (2.0 * params.m_x)
        + params.hbar**2 / (8.0 * params.m_q) * fisher_field(state)
        + params.potential_values(g, t)
    )
    value = float(dens.sum() * g.cell)
    if not np.isfinite(value):
        raise errors.NonFinite("ensemble energy evaluated to a non-finite value")
    return value


def delta_H_delta_S(state: HybridState, params: HamiltonianParams, t: float = 0.0) -> np.ndarray:
    """dH/dS = -d_q(P d_qS / m_q) - d_x(P d_xS / m_x).

    This is the probability-flux divergence; its grid integral telescopes to
    boundary residues and vanishes for decayed states.
    """
    g = state.grid
    P, S = state.P, state.S
    Sq = diff1(S, g.dq, 0, g.periodic)
    Sx = diff1(S, g.dx, 1, g.periodic)
    return -(
        diff1(P * Sq, g.dq, 0, g.periodic) / params.m_q
        + diff1(P * Sx, g.dx, 1, g.periodic) / params.m_x
    )


def quantum_potential(state: HybridState, params: HamiltonianParams) -> np.ndarray:
    """-(hbar^2 / 2 m_q) (d_q^2 sqrt P) / sqrt P as the discrete-gradient form.

    Evaluated as (hbar^2/8 m_q) [ (d_q L)^2 - 2 d_q(P d_q L)/P ] with L = ln P,
    which is the exact derivative of the discrete hbar^2 energy term.  Cells in
    the far tails are masked to zero.
    """
    g = state.grid
    L = state.log_density()
    P = np.exp(L)  # floored density, so P * exp(-L) == 1 exactly
    Lq = diff1(L, g.dq, 0, g.periodic)
    fisher_grad = Lq * Lq - 2.0 * diff1(P * Lq, g.dq, 0, g.periodic) * np.exp(-L)
    out = params.hbar**2 / (8.0 * params.m_q) * fisher_grad
    return np.where(state.tail_mask(), out, 0.0)


def delta_H_delta_P(state: HybridState, params: HamiltonianParams, t: float = 0.0) -> np.ndarray:
    """dH/dP = (d_qS)^2/2m_q + (d_xS)^2/2m_x + V + quantum potential."""
    g = state.grid
    Sq = diff1(state.S, g.dq, 0, g.periodic)
    Sx = diff1(state.S, g.dx, 1, g.periodic)
    out = (
        Sq * Sq / (2.0 * params.m_q)
        + Sx * Sx / (2.0 * params.m_x)
        + params.potential_values(g, t)
        + quantum_potential(state, params)
    )
    if not np.isfinite(out).all():
        raise errors.NonFinite("dH/dP contains non-finite entries")
    return out
