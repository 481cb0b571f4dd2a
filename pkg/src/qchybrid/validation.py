"""Acceptance checks: every shipped guarantee as an executable, timed check.

Each check pins its tolerance at the value promised in the package contract;
`run_validation` executes the registry and reports one pass/fail line per
check.  The displaced-Gaussian closed-form check (number 6) encodes a target
value that the independent quadrature oracle contradicts -- see its docstring;
it is kept faithful to the stated target and is expected to fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import errors
from .brackets import (
    FunctionalHandle,
    d2dt2_x2_free,
    jacobi_residual,
    poisson_bracket,
    signal_integral,
)
from .dynamics import IntegratorSpec, evolve, stability_limit
from .experiments import Branch, control_protocol, default_protocol, run_signaling
from .gaussian import (
    derive_moment_flow,
    evolve_moments,
    gaussian_moments,
    moments_to_state,
)
from .grid import GridSpec, HybridState, hybrid_state, normalize, random_state
from .hamiltonian import HamiltonianParams, PotentialSpec
from .observables import (
    classical_poly,
    obs_pq,
    obs_pq2,
    obs_px,
    obs_px2,
    obs_q,
    obs_q2,
    obs_x,
    obs_x2,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    required: float
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: measured {self.measured:.3e} "
            f"(required {self.required:.3e}, {self.seconds:.1f}s) - {self.detail}"
        )


def _timed(fn):
    t0 = time.time()
    out = fn()
    return out, time.time() - t0


def _quantum_observables():
    return [obs_q(), obs_q2(), obs_pq(), obs_pq2()]


def _config_observables():
    return [obs_x(), obs_x2()]


# ---------------------------------------------------------------------------
# 1. bracket reductions {<x>,<p_x>} = {<q>,<p_q>} = 1
# ---------------------------------------------------------------------------

def check_bracket_reductions(n_states: int = 100, grid_n: int = 128, seed: int = 11) -> CheckResult:
    grid = GridSpec(-8, 8, grid_n, -8, 8, grid_n)
    rng = np.random.default_rng(seed)
    x, px = FunctionalHandle(obs_x()), FunctionalHandle(obs_px())
    q, pq = FunctionalHandle(obs_q()), FunctionalHandle(obs_pq())

    def body():
        worst = 0.0
        for _ in range(n_states):
            st = random_state(grid, rng)
            worst = max(worst, abs(poisson_bracket(x, px, st) - 1.0))
            worst = max(worst, abs(poisson_bracket(q, pq, st) - 1.0))
        return worst

    worst, secs = _timed(body)
    passed = worst < 1e-8 and secs < 60.0
    return CheckResult(
        "bracket-reductions",
        passed,
        worst,
        1e-8,
        f"max |{{position, momentum}} - 1| over {n_states} random states "
        f"(runtime limit 60 s)",
        secs,
    )


# ---------------------------------------------------------------------------
# 2. configuration x quantum brackets vanish
# ---------------------------------------------------------------------------

def check_config_quantum_brackets(n_states: int = 100, grid_n: int = 128, seed: int = 12) -> CheckResult:
    grid = GridSpec(-8, 8, grid_n, -8, 8, grid_n)
    rng = np.random.default_rng(seed)
    cs = [FunctionalHandle(o) for o in _config_observables()]
    qs = [FunctionalHandle(o) for o in _quantum_observables()]

    def body():
        worst = 0.0
        for _ in range(n_states):
            st = random_state(grid, rng)
            for c in cs:
                for qo in qs:
                    worst = max(worst, abs(poisson_bracket(c, qo, st)))
        return worst

    worst, secs = _timed(body)
    return CheckResult(
        "config-quantum-brackets",
        worst < 1e-9,
        worst,
        1e-9,
        f"max |{{C(x), Q}}| over {n_states} random states x "
        f"{len(cs)}x{len(qs)} observable pairs",
        secs,
    )


# ---------------------------------------------------------------------------
# 3. first-derivative immunity: d<C(x)>/dt independent of m_q at lambda = 0
# ---------------------------------------------------------------------------

def check_rate_mass_invariance(n_states: int = 20, grid_n: int = 96, seed: int = 13) -> CheckResult:
    grid = GridSpec(-8, 8, grid_n, -8, 8, grid_n)
    rng = np.random.default_rng(seed)
    p1 = HamiltonianParams(m_q=1.0)
    p2 = HamiltonianParams(m_q=2.0)

    def body():
        worst = 0.0
        for _ in range(n_states):
            st = random_state(grid, rng, correlated=True)
            for obs in _config_observables():
                c = FunctionalHandle(obs)
                rates = []
                for p in (p1, p2):
                    hq = FunctionalHandle("H_q", p)
                    hc = FunctionalHandle("H_c", p)
                    rates.append(
                        poisson_bracket(c, hq, st) + poisson_bracket(c, hc, st)
                    )
                worst = max(worst, abs(rates[0] - rates[1]))
        return worst

    worst, secs = _timed(body)
    return CheckResult(
        "rate-mass-invariance",
        worst < 1e-8,
        worst,
        1e-8,
        "max |d<C(x)>/dt(m_q) - d<C(x)>/dt(2 m_q)| on correlated states, "
        "C in {x, x^2}",
        secs,
    )


# ---------------------------------------------------------------------------
# 4. second-derivative identity along free post-switch segments
# ---------------------------------------------------------------------------

def check_second_derivative_identity(n_q: int = 128, n_x: int = 96) -> CheckResult:
    proto = default_protocol(n_q=n_q, n_x=n_x, detection_threshold=np.inf)

    def body():
        report = run_signaling(proto, with_onset=False)
        rec = report.series_a
        post = rec.times > proto.t_off + 1e-12
        t = rec.times[post]
        x2 = rec.x_second_moment()[post]
        formula = rec.column("d2x2_formula")[post]
        h = t[1] - t[0]
        fd2 = (x2[2:] - 2 * x2[1:-1] + x2[:-2]) / h**2
        scale = np.abs(formula[1:-1]).max()
        return np.abs(fd2 - formula[1:-1]).max() / scale

    worst, secs = _timed(body)
    return CheckResult(
        "second-derivative-identity",
        worst < 1e-4,
        worst,
        1e-4,
        "relative gap between centered differences of <x^2>(t) and "
        "2<p_x^2>/m_x^2 + signal integral on the free segment",
        secs,
    )


# ---------------------------------------------------------------------------
# 5. factorized null: zero signal integral and no detection without history
# ---------------------------------------------------------------------------

def check_factorized_null(grid_n: int = 128, seed: int = 14) -> CheckResult:
    grid = GridSpec(-8, 8, grid_n, -8, 8, grid_n)
    rng = np.random.default_rng(seed)
    params = HamiltonianParams()

    def body():
        worst = 0.0
        for _ in range(10):
            a = random_state(grid, rng, correlated=False)
            b = random_state(grid, rng, correlated=False)
            P = np.outer(a.P.sum(axis=1), b.P.sum(axis=0))
            st = hybrid_state(grid, P, a.S + b.S)
            worst = max(worst, abs(signal_integral(st, params)))
        m = gaussian_moments(mean=(0.2, -0.4), sigma=((0.7, 0.0), (0.0, 0.9)))
        worst = max(worst, abs(signal_integral(moments_to_state(m, grid), params)))
        control = run_signaling(
            control_protocol(default_protocol(n_q=128, n_x=96)), with_onset=False
        )
        detected_penalty = 1.0 if control.detected else 0.0
        return worst + detected_penalty

    worst, secs = _timed(body)
    return CheckResult(
        "factorized-null",
        worst < 1e-9,
        worst,
        1e-9,
        "max |signal integral| on product states; never-interacted control "
        "must not detect",
        secs,
    )


# ---------------------------------------------------------------------------
# 6. displaced-Gaussian closed form (kept faithful to its stated target)
# ---------------------------------------------------------------------------

def check_displaced_gaussian_value(grid_n: int = 256) -> CheckResult:
    """Asserts signal_integral = 2/9 on the displaced correlated Gaussian
    (sigma_q^2 = sigma_x^2 = 1, cov 0.5, means (0, 1), unit masses and hbar).

    The independent quadrature oracle disagrees with this target: for any
    Gaussian density the integrand's expectation is
    2 Lam_qx [Lam_qq Sigma_qx + Lam_qx Sigma_xx] = 2 Lam_qx (Lam Sigma)_qx = 0
    identically (the displacement terms cancel because the log-gradient is
    centered on the mean), so the measured value is ~0 and this check fails.
    It is retained unmodified rather than tuned to the oracle.
    """
    grid = GridSpec(-10, 10, grid_n, -10, 10, grid_n)
    params = HamiltonianParams()
    m = gaussian_moments(mean=(0.0, 1.0), sigma=((1.0, 0.5), (0.5, 1.0)))

    def body():
        st = moments_to_state(m, grid)
        return abs(signal_integral(st, params) - 2.0 / 9.0)

    gap, secs = _timed(body)
    return CheckResult(
        "displaced-gaussian-closed-form",
        gap < 1e-6,
        gap,
        1e-6,
        "|signal integral - 2/9| on the displaced correlated Gaussian; the "
        "quadrature oracle gives 0 for every Gaussian (ΛΣ = 1), so the "
        "stated 2/9 target cannot be met by a faithful implementation",
        secs,
    )


# ---------------------------------------------------------------------------
# 7. signaling reproduction at full resolution
# ---------------------------------------------------------------------------

def check_signaling_reproduction(n_q: int = 256, n_x: int = 192) -> CheckResult:
    def body():
        report = run_signaling(default_protocol(n_q=n_q, n_x=n_x), with_onset=False)
        pre = report.times <= report.protocol.t_off + 1e-12
        pre_identical = np.array_equal(
            report.series_a.x_second_moment()[pre],
            report.series_b.x_second_moment()[pre],
        )
        report_v = run_signaling(
            default_protocol(
                branch=Branch("replace_Vq", v_q=(0.0, 0.0, 0.5)), n_q=n_q, n_x=n_x
            ),
            with_onset=False,
        )
        ok = (
            report.detected
            and pre_identical
            and report.control_max_divergence is not None
            and report.control_max_divergence * 10.0 < report.max_divergence
            and report_v.detected
        )
        return ok, report.max_divergence

    (ok, max_div), secs = _timed(lambda: body())
    passed = ok and max_div > 1e-6 and secs < 600.0
    return CheckResult(
        "signaling-reproduction",
        passed,
        max_div,
        1e-6,
        "mass-scale and potential-swap branches detected, pre-branch "
        "segments bit-identical, never-interacted control null "
        "(runtime limit 600 s)",
        secs,
    )


# ---------------------------------------------------------------------------
# 8. mass-scaling of the instantaneous signal-term difference
# ---------------------------------------------------------------------------

def mixture_state(grid: GridSpec) -> HybridState:
    """Correlated non-Gaussian demo state: two displaced product Gaussians.

    Gaussian densities make the signal integral vanish identically, so the
    scaling law needs a state like this to be non-vacuous.
    """
    Qm, Xm = grid.meshes()
    P = np.zeros_like(Qm)
    for cq, cx in ((0.8, 0.8), (-0.8, -0.8)):
        P += np.exp(-((Qm - cq) ** 2 + (Xm - cx) ** 2) / (2 * 0.25))
    return hybrid_state(grid, P, np.zeros_like(P))


def check_mass_scaling(grid_n: int = 192) -> CheckResult:
    grid = GridSpec(-8, 8, grid_n, -8, 8, grid_n)

    def body():
        st = mixture_state(grid)
        base = HamiltonianParams(m_q=1.0)
        sig0 = signal_integral(st, base)
        if abs(sig0) < 1e-6:
            raise errors.InsufficientSignal("demo state lost its signal term")
        worst = 0.0
        for f in (2.0, 4.0, 8.0):
            branch = Branch("scale_mq", f).apply(base)
            delta = sig0 - signal_integral(st, branch)
            expected = sig0 * (1.0 - 1.0 / f)
            worst = max(worst, abs(delta / expected - 1.0))
        return worst

    worst, secs = _timed(body)
    return CheckResult(
        "mass-scaling",
        worst < 0.01,
        worst,
        0.01,
        "signal-term branch differences follow (1 - 1/f) for f in {2,4,8} "
        "on a correlated non-Gaussian state",
        secs,
    )


# ---------------------------------------------------------------------------
# 9. pure-limit oracles
# ---------------------------------------------------------------------------

def check_pure_limits(grid_n: int = 128) -> CheckResult:
    def body():
        params = HamiltonianParams()
        # (a) free quantum wavepacket spreading
        grid = GridSpec(-8, 8, grid_n, -8, 8, grid_n)
        s0 = 0.5
        st = moments_to_state(gaussian_moments(sigma=((s0, 0), (0, 0.25))), grid)
        dt = stability_limit(grid, params)
        rec = evolve(st, params, IntegratorSpec(dt=dt), 0.0, 2 * s0, sample_dt=0.05)
        exact = s0 + (rec.times / (2 * np.sqrt(s0))) ** 2
        err_spread = np.abs(rec.column("q_var") - exact).max() / exact.max()

        # (b) classical ballistic variance growth (cold expanding ensemble)
        a0 = 1.0
        sx = 0.45
        st2 = moments_to_state(
            gaussian_moments(sigma=((0.5, 0), (0, sx)), s_hess=((0, 0), (0, a0))), grid
        )
        rec2 = evolve(st2, params, IntegratorSpec(dt=dt), 0.0, 0.8, sample_dt=0.05)
        exact2 = sx * (1.0 + a0 * rec2.times) ** 2
        err_ball = np.abs(rec2.column("x_var") - exact2).max() / exact2.max()
        # same limit through the moment solver
        traj = evolve_moments(
            gaussian_moments(sigma=((0.5, 0), (0, sx)), s_hess=((0, 0), (0, a0))),
            params,
            0.01,
            80,
        )
        mom = np.array([m.sigma[1, 1] for m in traj])
        terr = np.abs(mom - sx * (1.0 + a0 * np.arange(81) * 0.01) ** 2).max()
        err_ball = max(err_ball, terr)

        # (c) stationary hybrid ground configuration over 1000 steps
        params_h = HamiltonianParams(potential=PotentialSpec(v_q=(0, 0, 0.125)))
        st3 = moments_to_state(gaussian_moments(sigma=((1.0, 0), (0, 0.2))), grid)
        dt3 = stability_limit(grid, params_h)
        rec3 = evolve(
            st3, params_h, IntegratorSpec(dt=dt3, renormalize_every=10**9),
            0.0, 1000 * dt3, sample_dt=200 * dt3,
        )
        drift = 0.0
        for col in ("x_var", "q_var", "pq2", "px2", "x_mean", "q_mean", "energy"):
            v = rec3.column(col)
            drift = max(drift, np.abs(v - v[0]).max())
        return err_spread / 1e-3, err_ball / 1e-5, drift / 1e-6

    (r_spread, r_ball, r_drift), secs = _timed(body)
    worst = max(r_spread, r_ball, r_drift)
    return CheckResult(
        "pure-limits",
        worst < 1.0,
        worst,
        1.0,
        "worst ratio of: spreading error/1e-3, ballistic error/1e-5, "
        "stationary drift/1e-6",
        secs,
    )


# ---------------------------------------------------------------------------
# 10. solver cross-validation on quadratic protocols
# ---------------------------------------------------------------------------

def _cross_validate(n: int, rtol: float) -> float:
    from .gaussian import evolve_moments_record

    grid = GridSpec(-8, 8, n, -8, 8, n)
    params = HamiltonianParams(
        potential=PotentialSpec(v_q=(0, 0, 0.5), v_x=(0, 0, 0.5)),
        interaction_schedule=((0.0, 0.75, 1.0),),
    )
    m0 = gaussian_moments(mean=(0.0, 1.0), sigma=((0.5, 0), (0, 0.5)))
    st = moments_to_state(m0, grid)
    dt = stability_limit(grid, params)
    rec_g = evolve(st, params, IntegratorSpec(dt=dt), 0.0, 1.5, sample_dt=0.05)
    rec_m = evolve_moments_record(m0, params, grid, 0.0, 1.5, 0.05)
    worst = 0.0
    for col in ("x_mean", "x_var", "px_mean", "px2", "q_mean", "q_var", "pq2",
                "energy", "separability_defect", "signal_integral", "norm"):
        a, b = rec_g.column(col), rec_m.column(col)
        # columns that are zero for this protocol are held to an absolute
        # floor of rtol * 1e-3 instead of a meaningless relative gap
        scale = max(np.abs(a).max(), np.abs(b).max(), 1e-3)
        worst = max(worst, np.abs(a - b).max() / scale / rtol)
    return worst


def check_solver_cross_validation(n_base: int = 128, n_doubled: int = 256) -> CheckResult:
    def body():
        r1 = _cross_validate(n_base, 1e-3)
        r2 = _cross_validate(n_doubled, 1e-5)
        return max(r1, r2)

    worst, secs = _timed(body)
    return CheckResult(
        "solver-cross-validation",
        worst < 1.0,
        worst,
        1.0,
        f"worst column gap ratio: grid vs moment solver at {n_base}^2 "
        f"(tol 1e-3) and {n_doubled}^2 (tol 1e-5), coupled-oscillator protocol",
        secs,
    )


# ---------------------------------------------------------------------------
# 11. conservation and integrator order
# ---------------------------------------------------------------------------

def check_conservation_and_order(grid_n: int = 128) -> CheckResult:
    def body():
        grid = GridSpec(-8, 8, grid_n, -8, 8, grid_n)
        params = HamiltonianParams(
            potential=PotentialSpec(v_q=(0, 0, 0.5), v_x=(0, 0, 0.5)),
            interaction_schedule=((0.0, 0.5, 1.0),),
        )
        st = moments_to_state(
            gaussian_moments(mean=(0.0, 1.0), sigma=((0.5, 0), (0, 0.5))), grid
        )
        dt = stability_limit(grid, params)
        # no scheduled renormalization: measure the raw drifts
        rec = evolve(
            st, params, IntegratorSpec(dt=dt, renormalize_every=10**9),
            0.0, 1.0, sample_dt=0.05,
        )
        steps_per_sample = np.ceil(np.diff(rec.times) / dt)
        norm = rec.column("norm")
        per_step = np.abs(np.diff(norm)) / steps_per_sample
        r_norm = per_step.max() / 1e-8

        # energy drift per unit time, piecewise within lambda segments
        t, en = rec.times, rec.column("energy")
        r_energy = 0.0
        for lo, hi in ((0.0, 0.5), (0.5, 1.0)):
            sel = (t >= lo + 1e-12) & (t <= hi + 1e-12)
            seg = en[sel]
            span = t[sel][-1] - t[sel][0]
            r_energy = max(
                r_energy, np.abs(seg - seg[0]).max() / abs(seg[0]) / span / 1e-6
            )

        # renormalization magnitudes on a normally-configured run
        rec2 = evolve(
            st, params, IntegratorSpec(dt=dt, renormalize_every=50),
            0.0, 0.5, sample_dt=0.1,
        )
        r_renorm = (rec2.max_renorm_deviation() / 50.0) / 1e-8

        # measured convergence order on a coarse, vigorous run
        grid_c = GridSpec(-8, 8, 32, -8, 8, 32)
        params_c = HamiltonianParams(
            potential=PotentialSpec(v_q=(0, 0, 0.5), v_x=(0, 0, 0.5)),
            interaction_schedule=((0.0, 10.0, 1.0),),
        )
        st_c = moments_to_state(
            gaussian_moments(mean=(0.0, 0.8), sigma=((0.6, 0), (0, 0.6))), grid_c
        )
        dt_c = stability_limit(grid_c, params_c)
        vals = []
        for div in (1, 2, 8):
            spec = IntegratorSpec(dt=dt_c / div, renormalize_every=10**9)
            r = evolve(st_c, params_c, spec, 0.0, 0.5, sample_dt=0.5)
            vals.append(r.x_second_moment()[-1])
        e1 = abs(vals[0] - vals[2])
        e2 = abs(vals[1] - vals[2])
        order = np.log2(e1 / e2) if e2 > 0 else 4.0
        return r_norm, r_energy, r_renorm, order

    (r_norm, r_energy, r_renorm, order), secs = _timed(body)
    worst = max(r_norm, r_energy, r_renorm)
    passed = worst < 1.0 and order >= 3.8
    return CheckResult(
        "conservation-and-order",
        passed,
        max(worst, 3.8 / max(order, 1e-6)),
        1.0,
        f"norm drift/step, energy drift/time, renorm magnitude ratios <= 1; "
        f"measured rk4 order {order:.2f} (need >= 3.8)",
        secs,
    )


# ---------------------------------------------------------------------------
# 12. algebra identities: antisymmetry and Jacobi
# ---------------------------------------------------------------------------

def check_algebra_identities(grid_n: int = 96, seed: int = 15) -> CheckResult:
    grid = GridSpec(-8, 8, grid_n, -8, 8, grid_n)
    rng = np.random.default_rng(seed)
    params = HamiltonianParams(
        potential=PotentialSpec(v_q=(0, 0, 0.25), v_x=(0, 0, 0.25))
    )
    pool = [
        FunctionalHandle(obs_x()),
        FunctionalHandle(obs_x2()),
        FunctionalHandle(obs_px()),
        FunctionalHandle(obs_px2()),
        FunctionalHandle(obs_q()),
        FunctionalHandle(obs_q2()),
        FunctionalHandle(obs_pq()),
        FunctionalHandle(obs_pq2()),
        FunctionalHandle("H_q", params),
        FunctionalHandle("H_c", params),
        FunctionalHandle("H_int", params, lam=1.0),
    ]

    def body():
        anti = 0.0
        jac = 0.0
        for _ in range(3):
            st = random_state(grid, rng)
            for _ in range(8):
                a, b = rng.choice(len(pool), size=2, replace=False)
                anti = max(
                    anti,
                    abs(
                        poisson_bracket(pool[a], pool[b], st)
                        + poisson_bracket(pool[b], pool[a], st)
                    ),
                )
            for _ in range(4):
                a, b, c = rng.choice(len(pool), size=3, replace=False)
                jac = max(jac, abs(jacobi_residual(pool[a], pool[b], pool[c], st)))
        return anti / 1e-10, jac / 1e-7

    (r_anti, r_jac), secs = _timed(body)
    worst = max(r_anti, r_jac)
    return CheckResult(
        "algebra-identities",
        worst < 1.0,
        worst,
        1.0,
        "antisymmetry residual/1e-10 and Jacobi residual/1e-7 over random "
        "registered pairs and triples",
        secs,
    )


ALL_CHECKS = (
    ("1", check_bracket_reductions),
    ("2", check_config_quantum_brackets),
    ("3", check_rate_mass_invariance),
    ("4", check_second_derivative_identity),
    ("5", check_factorized_null),
    ("6", check_displaced_gaussian_value),
    ("7", check_signaling_reproduction),
    ("8", check_mass_scaling),
    ("9", check_pure_limits),
    ("10", check_solver_cross_validation),
    ("11", check_conservation_and_order),
    ("12", check_algebra_identities),
)


def run_validation(quick: bool = False, emit=print) -> list[CheckResult]:
    """Run every acceptance check; `quick` shrinks the expensive grids (for
    development only -- the published numbers come from the full run)."""
    results = []
    for number, fn in ALL_CHECKS:
        if quick and fn is check_signaling_reproduction:
            result = fn(n_q=128, n_x=96)
        elif quick and fn is check_solver_cross_validation:
            result = fn(n_base=96, n_doubled=192)
        else:
            result = fn()
        result.name = f"criterion-{number} {result.name}"
        results.append(result)
        emit(result.line())
    return results


# ---------------------------------------------------------------------------
# randomized identity sweeps for the bracket-check CLI command
# ---------------------------------------------------------------------------

def bracket_check_report(seed: int, n_states: int = 20, grid_n: int = 96) -> tuple[str, bool]:
    """Deterministic text report of the bracket identity sweeps."""
    grid = GridSpec(-8, 8, grid_n, -8, 8, grid_n)
    rng = np.random.default_rng(seed)
    x, px = FunctionalHandle(obs_x()), FunctionalHandle(obs_px())
    q, pq = FunctionalHandle(obs_q()), FunctionalHandle(obs_pq())
    cs = [FunctionalHandle(o) for o in _config_observables()]
    qs = [FunctionalHandle(o) for o in _quantum_observables()]
    params = HamiltonianParams()
    pool = cs + qs + [FunctionalHandle("H_q", params), FunctionalHandle("H_c", params)]

    red = zero = anti = jac = 0.0
    for _ in range(n_states):
        st = random_state(grid, rng)
        red = max(red, abs(poisson_bracket(x, px, st) - 1.0))
        red = max(red, abs(poisson_bracket(q, pq, st) - 1.0))
        for c in cs:
            for qo in qs:
                zero = max(zero, abs(poisson_bracket(c, qo, st)))
        a, b = rng.choice(len(pool), size=2, replace=False)
        anti = max(
            anti,
            abs(poisson_bracket(pool[a], pool[b], st) + poisson_bracket(pool[b], pool[a], st)),
        )
        a, b, c_ = rng.choice(len(pool), size=3, replace=False)
        jac = max(jac, abs(jacobi_residual(pool[a], pool[b], pool[c_], st)))

    rows = [
        ("canonical-reductions", red, 1e-8),
        ("config-quantum-zeros", zero, 1e-9),
        ("antisymmetry", anti, 1e-10),
        ("jacobi", jac, 1e-7),
    ]
    lines = [f"seed: {seed}", f"states: {n_states}", f"grid: {grid_n}x{grid_n}"]
    ok = True
    passes = 0
    for name, value, tol in rows:
        good = value < tol
        ok = ok and good
        passes += int(good)
        lines.append(f"{name}: max_residual={value!r} tolerance={tol!r} {'PASS' if good else 'FAIL'}")
    lines.append(f"passed: {passes}/{len(rows)}")
    return "\n".join(lines) + "\n", ok
