"""Functional Poisson brackets, canonical transformations and the signaling algebra.

The bracket of two functionals A, B of the hybrid state is

    {A, B} = int dq dx [ (dA/dP)(dB/dS) - (dB/dP)(dA/dS) ]

with variational derivatives.  Registered observables and Hamiltonian parts
carry hand-derived analytic derivative fields (O(N) per bracket); a per-cell
finite-difference path exists as a slow verification mode.  Nested brackets
are evaluated by differentiating along the canonical flow of the outer
generator:  {{A,B},C}(s) = d/de {A,B}(s transformed by C with parameter e).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import errors
from .grid import HybridState
from .hamiltonian import HamiltonianParams, quantum_potential
from .observables import (
    Observable,
    QUANTUM,
    eval_poly_xp,
    poly_dp,
    classical_expectation,
    quantum_expectation,
)
from .stencils import diff1

log = logging.getLogger(__name__)

HAMILTONIAN_PARTS = ("H_q", "H_c", "H_int")


@dataclass(frozen=True)
class FunctionalHandle:
    """A functional A[P,S] with evaluable value and variational derivatives.

    `target` is either a registered :class:`Observable` or one of the
    Hamiltonian parts "H_q", "H_c", "H_int" (the latter require bound params;
    H_int also binds the interaction strength `lam`).
    """

    target: Observable | str
    params: HamiltonianParams | None = None
    lam: float = 0.0
    derivative_mode: str = "analytic"
    fd_step: float = 1e-6

    def __post_init__(self):
        if isinstance(self.target, str):
            if self.target not in HAMILTONIAN_PARTS:
                raise errors.DerivativeUnavailable(f"unknown Hamiltonian part {self.target!r}")
            if self.params is None:
                raise errors.DerivativeUnavailable("Hamiltonian parts need bound params")
        if self.derivative_mode not in ("analytic", "finite_difference"):
            raise errors.RangeError(f"unknown derivative mode {self.derivative_mode!r}")

    @property
    def label(self) -> str:
        if isinstance(self.target, str):
            return self.target
        return self.target.label or str(self.target.descriptor)

    # -- value ---------------------------------------------------------------

    def value(self, state: HybridState) -> float:
        if isinstance(self.target, Observable):
            if self.target.kind == QUANTUM:
                return quantum_expectation(state, self.target)
            return classical_expectation(state, self.target)
        g = state.grid
        p = self.params
        cell = g.cell
        if self.target == "H_q":
            Sq = diff1(state.S, g.dq, 0, g.periodic)
            L = state.log_density()
            Lq = diff1(L, g.dq, 0, g.periodic)
            fisher = np.where(state.tail_mask(), Lq * Lq, 0.0)
            vq = p.potential.vq_values(g)[:, None]
            dens = state.P * (Sq * Sq / (2 * p.m_q) + p.hbar**2 / (8 * p.m_q) * fisher + vq)
            return float(dens.sum() * cell)
        if self.target == "H_c":
            Sx = diff1(state.S, g.dx, 1, g.periodic)
            vx = p.potential.vx_values(g)[None, :]
            dens = state.P * (Sx * Sx / (2 * p.m_x) + vx)
            return float(dens.sum() * cell)
        # H_int
        shape = p.potential.vqx_shape(g)
        return float(self.lam * (state.P * shape).sum() * cell)

    # -- variational derivative fields ----------------------------------------

    def fields(self, state: HybridState) -> tuple[np.ndarray, np.ndarray]:
        """Return (dA/dP, dA/dS) on the grid."""
        if self.derivative_mode == "finite_difference":
            return finite_difference_fields(self, state)
        g = state.grid
        if isinstance(self.target, Observable):
            obs = self.target
            if obs.kind == QUANTUM:
                return _quantum_fields(obs, state)
            _, X = g.meshes()
            Sx = diff1(state.S, g.dx, 1, g.periodic)
            dP = eval_poly_xp(obs.descriptor, X, Sx)
            dp_coeffs = poly_dp(obs.descriptor)
            if dp_coeffs:
                dS = -diff1(state.P * eval_poly_xp(dp_coeffs, X, Sx), g.dx, 1, g.periodic)
            else:
                dS = np.zeros_like(state.P)
            return dP, dS
        p = self.params
        if self.target == "H_q":
            Sq = diff1(state.S, g.dq, 0, g.periodic)
            vq = p.potential.vq_values(g)[:, None]
            dP = Sq * Sq / (2 * p.m_q) + quantum_potential(state, p) + vq
            dS = -diff1(state.P * Sq, g.dq, 0, g.periodic) / p.m_q
            return dP, dS
        if self.target == "H_c":
            Sx = diff1(state.S, g.dx, 1, g.periodic)
            vx = p.potential.vx_values(g)[None, :]
            dP = Sx * Sx / (2 * p.m_x) + vx
            dS = -diff1(state.P * Sx, g.dx, 1, g.periodic) / p.m_x
            return dP, dS
        shape = p.potential.vqx_shape(g)
        return self.lam * shape, np.zeros_like(state.P)


def _quantum_fields(obs: Observable, state: HybridState) -> tuple[np.ndarray, np.ndarray]:
    g = state.grid
    Qm, _ = g.meshes()
    zeros = np.zeros_like(state.P)
    name = obs.descriptor
    if name == "position":
        return Qm.copy(), zeros
    if name == "position_squared":
        return Qm * Qm, zeros
    if name == "momentum":
        Sq = diff1(state.S, g.dq, 0, g.periodic)
        return Sq, -diff1(state.P, g.dq, 0, g.periodic)
    if name in ("momentum_squared", "kinetic_energy"):
        Sq = diff1(state.S, g.dq, 0, g.periodic)
        L = state.log_density()
        P = np.exp(L)
        Lq = diff1(L, g.dq, 0, g.periodic)
        fisher_grad = Lq * Lq - 2.0 * diff1(P * Lq, g.dq, 0, g.periodic) * np.exp(-L)
        fisher_grad = np.where(state.tail_mask(), fisher_grad, 0.0)
        dP = Sq * Sq + 0.25 * obs.hbar**2 * fisher_grad
        dS = -2.0 * diff1(state.P * Sq, g.dq, 0, g.periodic)
        if name == "kinetic_energy":
            return dP / (2 * obs.m_q), dS / (2 * obs.m_q)
        return dP, dS
    if name == "potential":
        a0, a1, a2 = obs.v_q
        vq = a0 + a1 * g.q + a2 * g.q**2
        return np.broadcast_to(vq[:, None], state.P.shape).copy(), zeros
    raise errors.DerivativeUnavailable(f"no analytic derivatives for {name!r}")


def finite_difference_fields(handle: FunctionalHandle, state: HybridState):
    """Per-cell central-difference variational derivatives (O(N^2); verification only)."""
    base = FunctionalHandle(handle.target, handle.params, handle.lam, "analytic")
    g = state.grid
    cell = g.cell
    dP = np.zeros_like(state.P)
    dS = np.zeros_like(state.S)
    eps_p = handle.fd_step * state.P.max()
    eps_s = handle.fd_step * max(1.0, np.abs(state.S).max())
    work = state.copy()
    for i in range(g.n_q):
        for j in range(g.n_x):
            p0 = work.P[i, j]
            work.P[i, j] = p0 + eps_p
            up = base.value(work)
            work.P[i, j] = max(p0 - eps_p, 0.0)
            down = base.value(work)
            work.P[i, j] = p0
            dP[i, j] = (up - down) / (2 * eps_p * cell)
            s0 = work.S[i, j]
            work.S[i, j] = s0 + eps_s
            up = base.value(work)
            work.S[i, j] = s0 - eps_s
            down = base.value(work)
            work.S[i, j] = s0
            dS[i, j] = (up - down) / (2 * eps_s * cell)
    return dP, dS


def poisson_bracket(A: FunctionalHandle, B: FunctionalHandle, state: HybridState) -> float:
    """{A, B} evaluated at `state`."""
    aP, aS = A.fields(state)
    bP, bS = B.fields(state)
    value = float(((aP * bS) - (bP * aS)).sum() * state.grid.cell)
    if not np.isfinite(value):
        raise errors.NonFinite(f"bracket {{{A.label},{B.label}}} is non-finite")
    return value


def canonical_transform(
    state: HybridState, B: FunctionalHandle, eps: float, clamp: bool = False
) -> HybridState:
    """Infinitesimal canonical transformation generated by B:

        P -> P + eps dB/dS,    S -> S - eps dB/dP.

    The result is renormalized only when the generator conserves probability;
    otherwise a diagnostic is logged and the raw fields are returned.  With
    `clamp`, cells driven below zero are pinned at zero instead of raising;
    this only ever triggers in the noise-floor tails (density ratios across
    the stencil grow exponentially there) and is meant for the functional
    finite-differencing internals, where those cells are masked anyway.
    """
    bP, bS = B.fields(state)
    P_new = state.P + eps * bS
    if (P_new < 0).any():
        if clamp:
            lost = -float(P_new[P_new < 0].sum()) * state.grid.cell
            log.debug("transform by %s clamped %.3e of mass at zero", B.label, lost)
            P_new = np.maximum(P_new, 0.0)
        else:
            raise errors.NegativeDensity(
                f"transform by {B.label} with eps={eps} drives P negative"
            )
    S_new = state.S - eps * bP
    out = HybridState(state.grid, P_new, S_new)
    mass_rate = float(bS.sum() * state.grid.cell)
    if abs(mass_rate * eps) < 1e-8:
        total = out.total_probability()
        out = HybridState(state.grid, P_new / total, S_new)
    else:
        log.warning(
            "generator %s does not conserve probability (rate %.3e); skipping renormalization",
            B.label,
            mass_rate,
        )
    return out


# ---------------------------------------------------------------------------
# signaling algebra
# ---------------------------------------------------------------------------

def signal_integral(state: HybridState, params: HamiltonianParams) -> float:
    """(hbar^2 / 4 m_x m_q) * int dq dx P x d_x[(d_q ln P)^2].

    Vanishes exactly for factorized densities and, by the Gaussian moment
    identity, for every Gaussian density; correlated non-Gaussian densities
    give nonzero values.
    """
    g = state.grid
    L = state.log_density()
    Lq = diff1(L, g.dq, 0, g.periodic)
    _, X = g.meshes()
    integrand = state.P * X * diff1(Lq * Lq, g.dx, 1, g.periodic)
    integrand = np.where(state.tail_mask(), integrand, 0.0)
    value = float(integrand.sum() * g.cell)
    value *= params.hbar**2 / (4.0 * params.m_x * params.m_q)
    if not np.isfinite(value):
        raise errors.NonFinite("signal integral is non-finite")
    return value


def _require_free_context(params: HamiltonianParams, t: float | None) -> None:
    if t is not None and params.lambda_at(t) != 0.0:
        raise errors.ContextViolation("interaction is active at the requested time")
    if not params.potential.vx_is_flat():
        raise errors.ContextViolation("classical potential is not flat")


def d2dt2_x2_free(state: HybridState, params: HamiltonianParams, t: float | None = None) -> float:
    """Free-sector second time derivative of <x^2>:

        2 <p_x^2> / m_x^2 + signal_integral(state, params)
    """
    _require_free_context(params, t)
    g = state.grid
    Sx = diff1(state.S, g.dx, 1, g.periodic)
    px2 = float((state.P * Sx * Sx).sum() * g.cell)
    return 2.0 * px2 / params.m_x**2 + signal_integral(state, params)


def directional_derivative(
    func,
    generator: FunctionalHandle,
    state: HybridState,
    step: float = 1e-5,
    richardson: bool = True,
) -> float:
    """d/de func(state transformed by `generator` with parameter e) at e = 0."""

    def central(e: float) -> float:
        plus = func(canonical_transform(state, generator, +e, clamp=True))
        minus = func(canonical_transform(state, generator, -e, clamp=True))
        return (plus - minus) / (2 * e)

    d1 = central(step)
    if not richardson:
        return d1
    d2 = central(step / 2)
    return (4.0 * d2 - d1) / 3.0


def nested_bracket(
    A: FunctionalHandle,
    B: FunctionalHandle,
    C: FunctionalHandle,
    state: HybridState,
    step: float = 1e-5,
) -> float:
    """{{A, B}, C} by directional differentiation along the flow of C."""
    return directional_derivative(lambda s: poisson_bracket(A, B, s), C, state, step)


def jacobi_residual(
    A: FunctionalHandle,
    B: FunctionalHandle,
    C: FunctionalHandle,
    state: HybridState,
    step: float = 1e-5,
) -> float:
    """{{A,B},C} + {{B,C},A} + {{C,A},B}; zero for an exact Poisson structure."""
    return (
        nested_bracket(A, B, C, state, step)
        + nested_bracket(B, C, A, state, step)
        + nested_bracket(C, A, B, state, step)
    )


@dataclass(frozen=True)
class SecondDerivativeTerms:
    """The four nested-bracket contributions to d^2<x^2>/dt^2 with H = H_q + H_c."""

    cc: float  # {{<x^2>, H_c}, H_c}
    cq: float  # {{<x^2>, H_c}, H_q}
    qc: float  # {{<x^2>, H_q}, H_c}
    qq: float  # {{<x^2>, H_q}, H_q}

    @property
    def total(self) -> float:
        return self.cc + self.cq + self.qc + self.qq


def second_derivative_decomposition(
    state: HybridState,
    params: HamiltonianParams,
    t: float | None = None,
    step: float = 1e-5,
) -> SecondDerivativeTerms:
    """Evaluate the four nested brackets of the <x^2> second derivative.

    The inner bracket {<x^2>, H_c} has the closed form (2/m_x) <x p_x>, which
    is registered as a phase-space polynomial, so the first two terms are
    analytic; the last two use directional differentiation.
    """
    _require_free_context(params, t)
    from .observables import classical_poly, obs_x2

    inner = FunctionalHandle(classical_poly({(1, 1): 2.0 / params.m_x}, "2*x*px/m_x"))
    x2 = FunctionalHandle(obs_x2())
    h_q = FunctionalHandle("H_q", params)
    h_c = FunctionalHandle("H_c", params)
    cc = poisson_bracket(inner, h_c, state)
    cq = poisson_bracket(inner, h_q, state)
    qc = directional_derivative(lambda s: poisson_bracket(x2, h_q, s), h_c, state, step)
    qq = directional_derivative(lambda s: poisson_bracket(x2, h_q, s), h_q, state, step)
    return SecondDerivativeTerms(cc, cq, qc, qq)
