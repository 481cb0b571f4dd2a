"""Discretized configuration space (q, x) and the hybrid state fields (P, S).

The grid is uniform and cell-centered; every integral in the toolkit is the
midpoint Riemann sum  sum_ij F(i,j) * dq * dx.  Probability densities carry
units 1/length^2, the phase field S carries units of hbar.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import errors

log = logging.getLogger(__name__)

# Cells with P below this fraction of max(P) are dropped from log-sensitive
# quadratures; the mass they carry is below every advertised tolerance.
MASK_REL = 1e-13
# Relative floor applied before taking log(P), so ln P never hits -inf.
FLOOR_REL = 1e-300


@dataclass(frozen=True)
class GridSpec:
    """Rectangular cell-centered grid over the (q, x) configuration space."""

    q_min: float
    q_max: float
    n_q: int
    x_min: float
    x_max: float
    n_x: int
    boundary: str = "truncated"  # "truncated" or "periodic"

    def __post_init__(self):
        if not (self.q_max > self.q_min and self.x_max > self.x_min):
            raise errors.RangeError("grid bounds must satisfy q_max > q_min, x_max > x_min")
        if self.n_q < 8 or self.n_x < 8:
            raise errors.RangeError("grid needs at least 8 cells per axis")
        if self.boundary not in ("truncated", "periodic"):
            raise errors.RangeError(f"unknown boundary type {self.boundary!r}")

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.n_q

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def cell(self) -> float:
        """Quadrature weight of one cell."""
        return self.dq * self.dx

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def q(self) -> np.ndarray:
        return self.q_min + (np.arange(self.n_q) + 0.5) * self.dq

    @property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.dx

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q, self.x, indexing="ij")


@dataclass
class HybridState:
    """Probability density P(q,x) and phase S(q,x) on a grid.

    Use :func:`hybrid_state` to build validated, normalized states; direct
    construction is reserved for hot paths that guarantee the invariants.
    """

    grid: GridSpec
    P: np.ndarray
    S: np.ndarray

    def copy(self) -> "HybridState":
        return HybridState(self.grid, self.P.copy(), self.S.copy())

    def total_probability(self) -> float:
        return float(self.P.sum() * self.grid.cell)

    def log_density(self) -> np.ndarray:
        """ln P with a relative floor so tails never produce -inf."""
        pmax = self.P.max()
        return np.log(np.maximum(self.P, pmax * FLOOR_REL))

    def tail_mask(self) -> np.ndarray:
        """True on cells that participate in log-sensitive quadratures."""
        return self.P >= self.P.max() * MASK_REL

    def validate(self) -> None:
        g = self.grid
        if self.P.shape != (g.n_q, g.n_x) or self.S.shape != (g.n_q, g.n_x):
            raise errors.RangeError("field shapes do not match the grid")
        if not (np.isfinite(self.P).all() and np.isfinite(self.S).all()):
            raise errors.NonFinite("state fields contain non-finite entries")
        if (self.P < 0).any():
            raise errors.NegativeDensity("P has negative entries")
        if abs(self.total_probability() - 1.0) > 1e-9:
            raise errors.RangeError("state is not normalized to within 1e-9")


def hybrid_state(grid: GridSpec, P: np.ndarray, S: np.ndarray) -> HybridState:
    """Validated constructor: checks finiteness/positivity and normalizes P."""
    P = np.asarray(P, dtype=float)
    S = np.asarray(S, dtype=float)
    if P.shape != (grid.n_q, grid.n_x) or S.shape != (grid.n_q, grid.n_x):
        raise errors.RangeError("field shapes do not match the grid")
    if not (np.isfinite(P).all() and np.isfinite(S).all()):
        raise errors.NonFinite("state fields contain non-finite entries")
    if (P < 0).any():
        raise errors.NegativeDensity("P has negative entries")
    state = normalize(HybridState(grid, P, S.copy()))
    return state


def normalize(state: HybridState) -> HybridState:
    """Rescale P by one positive constant so that its integral is 1; S unchanged."""
    total = state.total_probability()
    if not np.isfinite(total) or total <= 0.0:
        raise errors.ZeroMass(f"total probability {total} cannot be normalized")
    if abs(total - 1.0) < 1e-14:
        return state  # already normalized to rounding level: rescale factor 1
    log.debug("normalize: rescaling by %.17g", 1.0 / total)
    return HybridState(state.grid, state.P / total, state.S)


def marginals(state: HybridState) -> tuple[np.ndarray, np.ndarray]:
    """Marginal densities P_q(q) = int P dx and P_x(x) = int P dq."""
    P_q = state.P.sum(axis=1) * state.grid.dx
    P_x = state.P.sum(axis=0) * state.grid.dq
    return P_q, P_x


def separability_defect(state: HybridState) -> float:
    """L1 distance between P and the product of its marginals.

    Zero exactly when P factorizes on the grid; strictly positive for
    correlated densities.
    """
    P_q, P_x = marginals(state)
    return float(np.abs(state.P - np.outer(P_q, P_x)).sum() * state.grid.cell)


# ---------------------------------------------------------------------------
# checkpoint I/O: text header with the grid spec, then CSV rows i,j,q,x,P,S
# ---------------------------------------------------------------------------

def save_state(state: HybridState, path) -> None:
    g = state.grid
    Q, X = g.meshes()
    with open(path, "w") as fh:
        fh.write("# qchybrid state checkpoint\n")
        for key in ("q_min", "q_max", "n_q", "x_min", "x_max", "n_x", "boundary"):
            fh.write(f"{key} = {getattr(g, key)!r}\n")
        fh.write("i,j,q,x,P,S\n")
        n_q, n_x = g.n_q, g.n_x
        P, S = state.P, state.S
        for i in range(n_q):
            for j in range(n_x):
                fh.write(
                    f"{i},{j},{float(Q[i, j])!r},{float(X[i, j])!r},"
                    f"{float(P[i, j])!r},{float(S[i, j])!r}\n"
                )


def load_state(path) -> HybridState:
    header: dict[str, str] = {}
    with open(path) as fh:
        lines = fh.readlines()
    idx = 0
    for idx, line in enumerate(lines):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line == "i,j,q,x,P,S":
            idx += 1
            break
        key, _, value = line.partition("=")
        header[key.strip()] = value.strip()
    try:
        grid = GridSpec(
            q_min=float(header["q_min"]),
            q_max=float(header["q_max"]),
            n_q=int(header["n_q"]),
            x_min=float(header["x_min"]),
            x_max=float(header["x_max"]),
            n_x=int(header["n_x"]),
            boundary=header["boundary"].strip("'\""),
        )
    except KeyError as exc:
        raise errors.SchemaError(f"checkpoint header is missing {exc}") from exc
    P = np.empty((grid.n_q, grid.n_x))
    S = np.empty((grid.n_q, grid.n_x))
    for line in lines[idx:]:
        line = line.strip()
        if not line:
            continue
        i_s, j_s, _, _, p_s, s_s = line.split(",")
        P[int(i_s), int(j_s)] = float(p_s)
        S[int(i_s), int(j_s)] = float(s_s)
    return hybrid_state(grid, P, S)


# ---------------------------------------------------------------------------
# randomized valid states for identity sweeps
# ---------------------------------------------------------------------------

def random_state(
    grid: GridSpec,
    rng: np.random.Generator,
    correlated: bool = True,
    perturbation: float = 0.35,
    phase_scale: float = 0.5,
) -> HybridState:
    """Random smooth valid state: Gaussian envelope times bounded wiggles.

    Envelope scales are kept small against the domain so the density decays to
    ~1e-13 of its peak well before the boundary; the bracket-identity sweeps
    rely on that decay.
    """
    Q, X = grid.meshes()
    half_q = 0.5 * (grid.q_max - grid.q_min)
    half_x = 0.5 * (grid.x_max - grid.x_min)
    mid_q = 0.5 * (grid.q_max + grid.q_min)
    mid_x = 0.5 * (grid.x_max + grid.x_min)

    # envelope sigma in [0.55, 0.85] per unit half-width 8, so edges sit > 8 sigma out
    sig_q = rng.uniform(0.55, 0.85) * half_q / 8.0
    sig_x = rng.uniform(0.55, 0.85) * half_x / 8.0
    mq = mid_q + rng.uniform(-0.4, 0.4) * (half_q / 8.0)
    mx = mid_x + rng.uniform(-0.4, 0.4) * (half_x / 8.0)
    c = rng.uniform(-0.55, 0.55) if correlated else 0.0

    dqv = (Q - mq) / sig_q
    dxv = (X - mx) / sig_x
    L0 = -0.5 * (dqv**2 - 2.0 * c * dqv * dxv + dxv**2) / (1.0 - c * c)

    bump = np.zeros_like(Q)
    for _ in range(3):
        a = rng.uniform(-perturbation, perturbation)
        wq = rng.uniform(0.3, 1.8)
        wx = rng.uniform(0.3, 1.8)
        ph1, ph2 = rng.uniform(0, 2 * np.pi, size=2)
        bump += a * np.cos(wq * dqv + ph1) * np.cos(wx * dxv + ph2)

    P = np.exp(L0 + bump)

    g = rng.uniform(-phase_scale, phase_scale, size=2)
    A = rng.uniform(-phase_scale, phase_scale, size=3)
    S = g[0] * (Q - mq) + g[1] * (X - mx)
    S += 0.5 * A[0] * (Q - mq) ** 2 + A[1] * (Q - mq) * (X - mx) + 0.5 * A[2] * (X - mx) ** 2
    for _ in range(2):
        b = rng.uniform(-phase_scale, phase_scale)
        wq = rng.uniform(0.3, 1.5)
        wx = rng.uniform(0.3, 1.5)
        S += b * np.sin(wq * dqv) * np.sin(wx * dxv)

    return hybrid_state(grid, P, S)
