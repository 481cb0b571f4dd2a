"""The signaling experiment: prepare correlations by interaction, switch the
coupling off, branch the ensemble under two different quantum-sector settings,
and compare the distant classical position statistics.

A protocol evolves one trajectory to the switch-off time t_off, forks two
branches that share that state bit-for-bit (A: unmodified, B: the quantum mass
scaled or the quantum potential replaced), evolves both freely to t_end, and
reports the divergence  d(t) = <x^2>_A(t) - <x^2>_B(t).  Detection is judged
against a self-calibrated threshold: 10x the largest spurious divergence of a
control run that never interacted (factorized initial state, lambda = 0
throughout, same branch operation).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as sstats

from . import errors
from .dynamics import IntegratorSpec, RunRecord, evolve, stability_limit
from .gaussian import (
    GaussianMoments,
    evolve_moments_record,
    gaussian_moments,
    moments_to_state,
)
from .grid import GridSpec, HybridState, marginals
from .hamiltonian import HamiltonianParams, PotentialSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Branch:
    """Quantum-sector modification applied to branch B strictly after t_off."""

    kind: str = "scale_mq"  # "scale_mq" | "replace_Vq" | "none"
    factor: float = 2.0
    v_q: tuple[float, float, float] = (0.0, 0.0, 0.5)

    def __post_init__(self):
        if self.kind not in ("scale_mq", "replace_Vq", "none"):
            raise errors.RangeError(f"unknown branch kind {self.kind!r}")
        if self.kind == "scale_mq" and self.factor <= 0:
            raise errors.RangeError("mass scale factor must be positive")

    def apply(self, params: HamiltonianParams) -> HamiltonianParams:
        if self.kind == "scale_mq":
            return params.with_m_q(params.m_q * self.factor)
        if self.kind == "replace_Vq":
            return params.with_v_q(tuple(self.v_q))
        return params


@dataclass(frozen=True)
class Protocol:
    """Signaling experiment description."""

    initial: GaussianMoments
    params: HamiltonianParams
    branch: Branch
    t_end: float
    sample_dt: float = 0.01
    solver: str = "grid"  # "grid" | "moments" | "both"
    grid: GridSpec | None = None
    dt: float | None = None  # grid-solver step; default from the stability bound
    c_stab: float = 0.1
    detection_threshold: float | None = None  # None -> self-calibrate via control run

    def __post_init__(self):
        if len(self.params.interaction_schedule) != 1:
            raise errors.RangeError("protocol needs exactly one interaction window")
        if self.solver not in ("grid", "moments", "both"):
            raise errors.RangeError(f"unknown solver {self.solver!r}")
        t0, t_off, _lam = self.params.interaction_schedule[0]
        if not (self.t_end > t_off > t0 >= 0.0):
            raise errors.RangeError("need t_end > t_off > window start >= 0")

    @property
    def t_off(self) -> float:
        return self.params.interaction_schedule[0][1]


def default_protocol(
    branch: Branch | None = None,
    n_q: int = 256,
    n_x: int = 192,
    t_end: float = 1.25,
    solver: str = "grid",
    coupling: float = 2.0,
    t_off: float = 0.5,
    sample_dt: float = 0.005,
    detection_threshold: float | None = None,
) -> Protocol:
    """Ground-width Gaussians, classical sector displaced to x=1, one strong
    short coupling window, free sectors otherwise.

    The rectangular domain is sized so that every branch (and the control)
    keeps more than 8 standard deviations of clearance on both axes for the
    whole run; the quantum coordinate needs the wider box because the free
    packet both drifts (the coupling pushes its mean) and spreads.
    """
    return Protocol(
        initial=gaussian_moments(mean=(0.0, 1.0), sigma=((0.5, 0.0), (0.0, 0.5))),
        params=HamiltonianParams(interaction_schedule=((0.0, t_off, coupling),)),
        branch=branch or Branch("scale_mq", 2.0),
        t_end=t_end,
        sample_dt=sample_dt,
        solver=solver,
        grid=GridSpec(-13.0, 13.0, n_q, -10.0, 10.0, n_x),
        detection_threshold=detection_threshold,
    )


def control_protocol(protocol: Protocol) -> Protocol:
    """Never-interacted companion: correlations zeroed from the initial
    moments, the interaction window strength set to zero, same branch."""
    m = protocol.initial
    sigma = np.diag(np.diag(m.sigma))
    hess = np.diag(np.diag(m.s_hess))
    initial = GaussianMoments(m.mean.copy(), sigma, m.s_grad.copy(), hess)
    t0, t1, _lam = protocol.params.interaction_schedule[0]
    params = protocol.params.with_schedule(((t0, t1, 0.0),))
    return replace(protocol, initial=initial, params=params, detection_threshold=np.inf)


@dataclass
class SignalReport:
    """Two branch trajectories and their classical-variance divergence."""

    protocol: Protocol
    series_a: RunRecord
    series_b: RunRecord
    divergence: np.ndarray  # <x^2>_A - <x^2>_B on the shared time grid
    threshold: float
    max_divergence: float
    detected: bool
    onset_power: float | None = None
    onset_coefficient: float | None = None
    control_max_divergence: float | None = None
    moments_series: tuple[RunRecord, RunRecord] | None = None

    @property
    def times(self) -> np.ndarray:
        return self.series_a.times

    def post_branch(self) -> np.ndarray:
        return self.times > self.protocol.t_off + 1e-12

    def write(self, outdir) -> None:
        """CSV pair plus a key: value summary."""
        import os

        os.makedirs(outdir, exist_ok=True)
        self.series_a.to_csv(os.path.join(outdir, "branch_a.csv"))
        self.series_b.to_csv(os.path.join(outdir, "branch_b.csv"))
        with open(os.path.join(outdir, "summary.txt"), "w") as fh:
            fh.write(f"t_off: {self.protocol.t_off!r}\n")
            fh.write(f"t_end: {self.protocol.t_end!r}\n")
            fh.write(f"branch_kind: {self.protocol.branch.kind}\n")
            fh.write(f"branch_factor: {self.protocol.branch.factor!r}\n")
            fh.write(f"solver: {self.protocol.solver}\n")
            fh.write(f"max_divergence: {self.max_divergence!r}\n")
            fh.write(f"detection_threshold: {self.threshold!r}\n")
            fh.write(f"detected: {self.detected}\n")
            if self.control_max_divergence is not None:
                fh.write(f"control_max_divergence: {self.control_max_divergence!r}\n")
            if self.onset_power is not None:
                fh.write(f"onset_power: {self.onset_power!r}\n")
                fh.write(f"onset_coefficient: {self.onset_coefficient!r}\n")


def _grid_leg(state, params, protocol, t0, t1):
    grid = state.grid
    dt = protocol.dt or stability_limit(grid, params, protocol.c_stab)
    spec = IntegratorSpec(dt=dt, c_stab=protocol.c_stab)
    return evolve(state, params, spec, t0, t1, sample_dt=protocol.sample_dt)


def _concat_records(pre: RunRecord, post: RunRecord) -> RunRecord:
    times = np.concatenate([pre.times, post.times[1:]])
    cols = {
        k: np.concatenate([pre.columns[k], post.columns[k][1:]]) for k in pre.columns
    }
    return RunRecord(
        times=times,
        columns=cols,
        solver=pre.solver,
        renorm_log=pre.renorm_log + post.renorm_log,
        final_state=post.final_state,
    )


def _run_branches_grid(protocol: Protocol) -> tuple[RunRecord, RunRecord]:
    grid = protocol.grid
    if grid is None:
        raise errors.RangeError("grid solver requires a grid in the protocol")
    state0 = moments_to_state(protocol.initial, grid)
    t_off = protocol.t_off
    pre = _grid_leg(state0, protocol.params, protocol, 0.0, t_off)
    fork = pre.final_state
    params_a = protocol.params
    params_b = protocol.branch.apply(protocol.params)
    post_a = _grid_leg(fork.copy(), params_a, protocol, t_off, protocol.t_end)
    post_b = _grid_leg(fork.copy(), params_b, protocol, t_off, protocol.t_end)
    return _concat_records(pre, post_a), _concat_records(pre, post_b)


def _run_branches_moments(protocol: Protocol) -> tuple[RunRecord, RunRecord]:
    grid = protocol.grid or GridSpec(-8, 8, 128, -8, 8, 128)
    t_off = protocol.t_off
    pre = evolve_moments_record(
        protocol.initial, protocol.params, grid, 0.0, t_off, protocol.sample_dt
    )
    fork = pre.final_moments
    params_b = protocol.branch.apply(protocol.params)
    post_a = evolve_moments_record(fork, protocol.params, grid, t_off, protocol.t_end, protocol.sample_dt)
    post_b = evolve_moments_record(fork, params_b, grid, t_off, protocol.t_end, protocol.sample_dt)
    return _concat_records(pre, post_a), _concat_records(pre, post_b)


def run_signaling(protocol: Protocol, with_onset: bool = True) -> SignalReport:
    """Execute the branching experiment and judge detection.

    When no explicit detection threshold is given, a control run (factorized
    initial state, interaction strength zero, same branch operation) is
    executed first and the threshold is set to 10x its largest spurious
    divergence.
    """
    control_max = None
    threshold = protocol.detection_threshold
    if threshold is None:
        control = run_signaling(control_protocol(protocol), with_onset=False)
        control_max = control.max_divergence
        threshold = 10.0 * max(control_max, 1e-15)

    runner = {"grid": _run_branches_grid, "moments": _run_branches_moments}
    if protocol.solver == "both":
        rec_a, rec_b = _run_branches_grid(protocol)
        moments_pair = _run_branches_moments(protocol)
    else:
        rec_a, rec_b = runner[protocol.solver](protocol)
        moments_pair = None

    div = rec_a.x_second_moment() - rec_b.x_second_moment()
    post = rec_a.times > protocol.t_off + 1e-12
    max_div = float(np.abs(div[post]).max()) if post.any() else 0.0
    report = SignalReport(
        protocol=protocol,
        series_a=rec_a,
        series_b=rec_b,
        divergence=div,
        threshold=float(threshold),
        max_divergence=max_div,
        detected=bool(max_div > threshold),
        control_max_divergence=control_max,
        moments_series=moments_pair,
    )
    if with_onset and protocol.branch.kind != "none":
        try:
            power, coeff = onset_analysis(report)
            report.onset_power = power
            report.onset_coefficient = coeff
        except errors.InsufficientSignal:
            pass
    return report


def onset_analysis(report: SignalReport, noise_floor: float | None = None) -> tuple[float, float]:
    """Fit |divergence| ~ c (t - t_off)^p over the earliest decade above noise.

    Returns (p, c) from a least-squares fit of log|d| against log(t - t_off),
    using the first factor-of-ten span of |d| above the noise floor.
    """
    if report.protocol.branch.kind == "none":
        raise errors.BranchInvalid("onset analysis needs a real branch operation")
    post = report.post_branch()
    if post.sum() < 20:
        raise errors.InsufficientSignal("need at least 20 post-branch samples")
    tau = report.times[post] - report.protocol.t_off
    d = np.abs(report.divergence[post])
    if noise_floor is None:
        noise_floor = max(report.threshold / 10.0, 1e-14)
    usable = d > 10.0 * noise_floor
    if usable.sum() < 5:
        raise errors.InsufficientSignal("post-branch divergence never clears the noise floor")
    first = np.argmax(usable)
    d0 = d[first]
    window = usable & (d <= 10.0 * d0)
    window[: first] = False
    if window.sum() < 5:
        window = usable.copy()
        window[np.cumsum(window) > max(5, usable.sum() // 2)] = False
    lt = np.log(tau[window])
    ld = np.log(d[window])
    p, logc = np.polyfit(lt, ld, 1)
    return float(p), float(np.exp(logc))


@dataclass(frozen=True)
class DetectionStats:
    """Finite-sample detectability of the branch difference at t_end."""

    z_statistic: float
    sample_mean_a: float
    sample_mean_b: float
    n_samples: int
    n_required: float  # samples per sub-ensemble for 95% power at alpha = 0.05
    delta: float  # analytic <x^2> difference between the branch marginals
    var_a: float  # analytic Var(x^2) under branch A's marginal
    var_b: float


def _marginal_x(record: RunRecord) -> tuple[np.ndarray, np.ndarray]:
    state = record.final_state
    if state is None:
        raise errors.RangeError("record carries no final state")
    _, p_x = marginals(state)
    return state.grid.x, p_x


def _sample_from_density(xs, dens, n, rng) -> np.ndarray:
    cdf = np.cumsum(dens)
    cdf /= cdf[-1]
    u = rng.uniform(size=n)
    return np.interp(u, cdf, xs)


def half_ensemble_detection(
    report: SignalReport,
    n_samples: int,
    rng_seed: int = 0,
    significance: float = 0.05,
    power: float = 0.95,
) -> DetectionStats:
    """Simulate measuring <x^2> on finite sub-ensembles drawn from each
    branch's classical marginal at t_end, and report the two-sample
    z-statistic plus the sample size needed to detect the analytic difference
    with the requested power (normal approximation)."""
    if n_samples < 10:
        raise errors.RangeError("need at least 10 samples per sub-ensemble")
    rng = np.random.default_rng(rng_seed)
    xs_a, dens_a = _marginal_x(report.series_a)
    xs_b, dens_b = _marginal_x(report.series_b)
    cell_a = xs_a[1] - xs_a[0]
    cell_b = xs_b[1] - xs_b[0]

    def moments(xs, dens, cell):
        m2 = float((dens * xs**2).sum() * cell)
        m4 = float((dens * xs**4).sum() * cell)
        return m2, m4 - m2**2  # <x^2>, Var(x^2)

    m2_a, var_a = moments(xs_a, dens_a, cell_a)
    m2_b, var_b = moments(xs_b, dens_b, cell_b)
    draws_a = _sample_from_density(xs_a, dens_a, n_samples, rng) ** 2
    draws_b = _sample_from_density(xs_b, dens_b, n_samples, rng) ** 2
    se = np.sqrt(var_a / n_samples + var_b / n_samples)
    z = float((draws_a.mean() - draws_b.mean()) / se)

    delta = m2_a - m2_b
    z_alpha = sstats.norm.ppf(1.0 - significance / 2.0)
    z_power = sstats.norm.ppf(power)
    if delta == 0.0:
        n_req = np.inf
    else:
        n_req = float((z_alpha + z_power) ** 2 * (var_a + var_b) / delta**2)
    return DetectionStats(
        z_statistic=z,
        sample_mean_a=float(draws_a.mean()),
        sample_mean_b=float(draws_b.mean()),
        n_samples=n_samples,
        n_required=n_req,
        delta=delta,
        var_a=var_a,
        var_b=var_b,
    )
