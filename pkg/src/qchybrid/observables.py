"""Expectation-value functionals over hybrid states.

Classical observables are phase-space polynomials C(x, p_x) evaluated with the
momentum replaced pointwise by d_x S; quantum observables are a registered set
of operators evaluated in (P, S) form with psi = sqrt(P) exp(i S / hbar)
implicit:

    <p_q>   = int P d_qS
    <p_q^2> = int P [ (d_qS)^2 + (hbar^2/4)(d_q ln P)^2 ]

Only classical configuration observables (no p_x dependence) are treated as
directly measurable by the experiments layer; p_x-dependent ones exist for the
internal algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import errors
from .grid import HybridState
from .hamiltonian import Poly2
from .stencils import diff1

CLASSICAL_CONFIG = "classical_config"
CLASSICAL_PHASE = "classical_phase"
QUANTUM = "quantum"

QUANTUM_OPS = (
    "position",
    "position_squared",
    "momentum",
    "momentum_squared",
    "kinetic_energy",
    "potential",
)

# classical descriptor: {(m, n): coeff} meaning sum c_mn x^m p_x^n, total degree <= 4
PolyXP = dict[tuple[int, int], float]


@dataclass(frozen=True)
class Observable:
    kind: str
    descriptor: PolyXP | str
    label: str = ""
    # extra data used by specific quantum operators
    hbar: float = 1.0
    m_q: float = 1.0
    v_q: Poly2 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind in (CLASSICAL_CONFIG, CLASSICAL_PHASE):
            if not isinstance(self.descriptor, dict):
                raise errors.RangeError("classical observables need a polynomial descriptor")
            for (m, n), coeff in self.descriptor.items():
                if m + n > 4 or m < 0 or n < 0:
                    raise errors.RangeError("classical polynomials limited to total degree 4")
                if not np.isfinite(coeff):
                    raise errors.RangeError("polynomial coefficients must be finite")
                if self.kind == CLASSICAL_CONFIG and n != 0:
                    raise errors.RangeError("configuration observables cannot depend on p_x")
        elif self.kind == QUANTUM:
            if self.descriptor not in QUANTUM_OPS:
                raise errors.RangeError(f"unregistered quantum operator {self.descriptor!r}")
        else:
            raise errors.RangeError(f"unknown observable kind {self.kind!r}")

    @property
    def is_classical(self) -> bool:
        return self.kind in (CLASSICAL_CONFIG, CLASSICAL_PHASE)


# -- concise constructors ----------------------------------------------------

def classical_poly(coeffs: PolyXP, label: str = "") -> Observable:
    kind = CLASSICAL_CONFIG if all(n == 0 for (_, n) in coeffs) else CLASSICAL_PHASE
    return Observable(kind, dict(coeffs), label)


def obs_x() -> Observable:
    return classical_poly({(1, 0): 1.0}, "x_mean")


def obs_x2() -> Observable:
    return classical_poly({(2, 0): 1.0}, "x2")


def obs_px() -> Observable:
    return classical_poly({(0, 1): 1.0}, "px_mean")


def obs_px2() -> Observable:
    return classical_poly({(0, 2): 1.0}, "px2")


def obs_q(hbar: float = 1.0) -> Observable:
    return Observable(QUANTUM, "position", "q_mean", hbar=hbar)


def obs_q2(hbar: float = 1.0) -> Observable:
    return Observable(QUANTUM, "position_squared", "q2", hbar=hbar)


def obs_pq(hbar: float = 1.0) -> Observable:
    return Observable(QUANTUM, "momentum", "pq_mean", hbar=hbar)


def obs_pq2(hbar: float = 1.0) -> Observable:
    return Observable(QUANTUM, "momentum_squared", "pq2", hbar=hbar)


def obs_kinetic(hbar: float = 1.0, m_q: float = 1.0) -> Observable:
    return Observable(QUANTUM, "kinetic_energy", "kinetic_q", hbar=hbar, m_q=m_q)


def obs_potential_q(v_q: Poly2, hbar: float = 1.0) -> Observable:
    return Observable(QUANTUM, "potential", "vq_mean", hbar=hbar, v_q=tuple(v_q))


# -- evaluation ---------------------------------------------------------------

def eval_poly_xp(coeffs: PolyXP, xv: np.ndarray, pv: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast(xv, pv).shape)
    for (m, n), c in coeffs.items():
        out += c * xv**m * pv**n
    return out


def poly_dp(coeffs: PolyXP) -> PolyXP:
    """d/dp_x of a polynomial descriptor."""
    out: PolyXP = {}
    for (m, n), c in coeffs.items():
        if n > 0:
            out[(m, n - 1)] = out.get((m, n - 1), 0.0) + n * c
    return out


def classical_expectation(state: HybridState, obs: Observable) -> float:
    """int dq dx P C(x, d_xS)."""
    if not obs.is_classical:
        raise errors.KindMismatch("classical_expectation needs a classical observable")
    g = state.grid
    _, X = g.meshes()
    Sx = diff1(state.S, g.dx, 1, g.periodic)
    C = eval_poly_xp(obs.descriptor, X, Sx)
    return float((state.P * C).sum() * g.cell)


def quantum_expectation(state: HybridState, obs: Observable) -> float:
    if obs.kind != QUANTUM:
        raise errors.KindMismatch("quantum_expectation needs a quantum observable")
    g = state.grid
    P = state.P
    cell = g.cell
    Qm, _ = g.meshes()
    name = obs.descriptor
    if name == "position":
        return float((P * Qm).sum() * cell)
    if name == "position_squared":
        return float((P * Qm * Qm).sum() * cell)
    if name == "momentum":
        Sq = diff1(state.S, g.dq, 0, g.periodic)
        return float((P * Sq).sum() * cell)
    if name == "momentum_squared":
        return _momentum_squared(state, obs.hbar)
    if name == "kinetic_energy":
        return _momentum_squared(state, obs.hbar) / (2.0 * obs.m_q)
    if name == "potential":
        a0, a1, a2 = obs.v_q
        vq = a0 + a1 * g.q + a2 * g.q**2
        return float((P * vq[:, None]).sum() * cell)
    raise errors.KindMismatch(f"unhandled quantum operator {name!r}")


def _momentum_squared(state: HybridState, hbar: float) -> float:
    g = state.grid
    Sq = diff1(state.S, g.dq, 0, g.periodic)
    L = state.log_density()
    Lq = diff1(L, g.dq, 0, g.periodic)
    dens = state.P * (Sq * Sq + 0.25 * hbar * hbar * np.where(state.tail_mask(), Lq * Lq, 0.0))
    value = float(dens.sum() * g.cell)
    if not np.isfinite(value):
        raise errors.NonFinite("momentum-squared expectation is non-finite")
    return value


def classical_momentum_moments(state: HybridState) -> tuple[float, float]:
    """(<p_x>, <p_x^2>) with p_x = d_x S pointwise."""
    g = state.grid
    Sx = diff1(state.S, g.dx, 1, g.periodic)
    p1 = float((state.P * Sx).sum() * g.cell)
    p2 = float((state.P * Sx * Sx).sum() * g.cell)
    return p1, p2
