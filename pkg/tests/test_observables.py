import numpy as np
import pytest

from qchybrid import (
    GridSpec,
    HybridState,
    classical_expectation,
    classical_momentum_moments,
    classical_poly,
    errors,
    gaussian_moments,
    hybrid_state,
    moments_to_state,
    obs_kinetic,
    obs_potential_q,
    obs_pq,
    obs_pq2,
    obs_px,
    obs_q,
    obs_q2,
    obs_x,
    obs_x2,
    quantum_expectation,
    random_state,
)
from qchybrid.observables import Observable, QUANTUM

from oracles import quantum_expectation_psi


def test_constant_classical_observable_is_normalization(product_state):
    one = classical_poly({(0, 0): 1.0})
    assert classical_expectation(product_state, one) == pytest.approx(1.0, abs=1e-12)


def test_odd_observable_vanishes_by_symmetry(grid96):
    st = moments_to_state(gaussian_moments(sigma=((0.7, 0.0), (0.0, 0.9))), grid96)
    assert abs(classical_expectation(st, obs_x())) < 1e-12


def test_x_squared_of_wide_gaussian(grid96):
    st = moments_to_state(gaussian_moments(sigma=((0.5, 0.0), (0.0, 2.0))), grid96)
    assert classical_expectation(st, obs_x2()) == pytest.approx(2.0, abs=1e-9)


def test_mixed_phase_space_polynomial(grid96):
    # C = x p_x with S = x^2/2: <x d_xS> = <x^2> = sigma_xx
    m = gaussian_moments(sigma=((0.5, 0.0), (0.0, 0.8)), s_hess=((0.0, 0.0), (0.0, 1.0)))
    st = moments_to_state(m, grid96)
    xpx = classical_poly({(1, 1): 1.0})
    assert classical_expectation(st, xpx) == pytest.approx(0.8, abs=1e-9)


def test_classical_kind_mismatch(product_state):
    with pytest.raises(errors.KindMismatch):
        classical_expectation(product_state, obs_q())
    with pytest.raises(errors.KindMismatch):
        quantum_expectation(product_state, obs_x())


def test_polynomial_degree_capped():
    with pytest.raises(errors.RangeError):
        classical_poly({(3, 2): 1.0})
    with pytest.raises(errors.RangeError):
        Observable("classical_config", {(1, 1): 1.0})
    with pytest.raises(errors.RangeError):
        Observable(QUANTUM, "parity")


def test_linear_phase_gives_momentum(grid96):
    k = 0.6
    st0 = moments_to_state(gaussian_moments(sigma=((0.7, 0.0), (0.0, 0.7))), grid96)
    Q, _ = grid96.meshes()
    st = HybridState(grid96, st0.P, k * Q)
    assert quantum_expectation(st, obs_pq()) == pytest.approx(k, abs=1e-10)


def test_phase_independent_of_q_gives_zero_momentum(grid96):
    st0 = moments_to_state(gaussian_moments(sigma=((0.7, 0.0), (0.0, 0.7))), grid96)
    _, X = grid96.meshes()
    st = HybridState(grid96, st0.P, 0.4 * X + 0.1 * X**2)
    assert abs(quantum_expectation(st, obs_pq())) < 1e-12


def test_momentum_squared_of_squeezed_gaussian(grid96):
    # sigma_q^2 = 1/2, zero phase: <p_q^2> = hbar^2/(4 sigma_q^2) = 0.5
    st = moments_to_state(gaussian_moments(sigma=((0.5, 0.0), (0.0, 0.5))), grid96)
    assert quantum_expectation(st, obs_pq2()) == pytest.approx(0.5, abs=1e-9)


def test_position_operators(grid96):
    m = gaussian_moments(mean=(0.7, 0.0), sigma=((0.6, 0.0), (0.0, 0.6)))
    st = moments_to_state(m, grid96)
    assert quantum_expectation(st, obs_q()) == pytest.approx(0.7, abs=1e-10)
    assert quantum_expectation(st, obs_q2()) == pytest.approx(0.6 + 0.49, abs=1e-9)


def test_kinetic_and_potential_operators(grid96):
    st = moments_to_state(gaussian_moments(sigma=((0.5, 0.0), (0.0, 0.5))), grid96)
    kin = quantum_expectation(st, obs_kinetic(m_q=2.0))
    assert kin == pytest.approx(0.5 / 4.0, abs=1e-9)
    pot = quantum_expectation(st, obs_potential_q((0.0, 0.0, 0.5)))
    assert pot == pytest.approx(0.25, abs=1e-9)  # <q^2>/2 = sigma/2


def test_classical_momentum_moments_zero_phase(product_state):
    p1, p2 = classical_momentum_moments(product_state)
    assert abs(p1) < 1e-12 and abs(p2) < 1e-12


def test_classical_momentum_moments_boost(grid96):
    v_mx = 1.3
    st0 = moments_to_state(gaussian_moments(sigma=((0.6, 0.0), (0.0, 0.6))), grid96)
    _, X = grid96.meshes()
    st = HybridState(grid96, st0.P, v_mx * X)
    p1, p2 = classical_momentum_moments(st)
    assert p1 == pytest.approx(v_mx, abs=1e-9)
    assert p2 == pytest.approx(v_mx**2, abs=1e-9)


def test_classical_momentum_moments_quadratic_phase(grid96):
    # S = x^2/2 on a zero-mean unit-variance marginal: (<p>, <p^2>) = (0, 1)
    m = gaussian_moments(sigma=((0.5, 0.0), (0.0, 1.0)), s_hess=((0.0, 0.0), (0.0, 1.0)))
    st = moments_to_state(m, grid96)
    p1, p2 = classical_momentum_moments(st)
    assert abs(p1) < 1e-10
    assert p2 == pytest.approx(1.0, abs=1e-8)


def test_cauchy_schwarz_on_random_states(grid96, rng):
    for _ in range(10):
        st = random_state(grid96, rng)
        p1, p2 = classical_momentum_moments(st)
        assert p2 >= p1**2 - 1e-10


def test_heisenberg_bound_on_zero_phase_gaussians(grid96):
    for sig in (0.3, 0.5, 1.0, 1.7):
        st = moments_to_state(gaussian_moments(sigma=((sig, 0.0), (0.0, 0.5))), grid96)
        q2 = quantum_expectation(st, obs_q2())
        p2 = quantum_expectation(st, obs_pq2())
        assert q2 * p2 >= 0.25 - 1e-10
        assert q2 * p2 == pytest.approx(0.25, abs=1e-6)  # saturated for Gaussians


@pytest.mark.parametrize("name", ["position", "position_squared", "momentum", "momentum_squared", "kinetic_energy", "potential"])
def test_wavefunction_path_agrees(grid128, name):
    # the (P,S)-form evaluation must match the independent psi-form evaluation
    m = gaussian_moments(
        mean=(0.3, -0.2),
        sigma=((0.8, 0.2), (0.2, 0.7)),
        s_grad=(0.4, -0.3),
        s_hess=((0.25, -0.1), (-0.1, 0.2)),
    )
    st = moments_to_state(m, grid128)
    v_q = (0.1, 0.2, 0.3)
    obs = {
        "position": obs_q(),
        "position_squared": obs_q2(),
        "momentum": obs_pq(),
        "momentum_squared": obs_pq2(),
        "kinetic_energy": obs_kinetic(m_q=1.7),
        "potential": obs_potential_q(v_q),
    }[name]
    direct = quantum_expectation(st, obs)
    psi_path = quantum_expectation_psi(st, name, hbar=1.0, m_q=1.7, v_q=v_q)
    assert direct == pytest.approx(psi_path, abs=1e-9)
