import numpy as np
import pytest

from qchybrid import (
    GridSpec,
    HamiltonianParams,
    PotentialSpec,
    delta_H_delta_P,
    delta_H_delta_S,
    ensemble_energy,
    errors,
    gaussian_moments,
    hybrid_state,
    moments_to_state,
    random_state,
)
from qchybrid.stencils import diff1

from oracles import gaussian_energy_oracle


def test_uniform_periodic_free_energy_is_zero():
    g = GridSpec(-2, 2, 32, -2, 2, 32, boundary="periodic")
    st = hybrid_state(g, np.full((32, 32), 1.0), np.zeros((32, 32)))
    assert abs(ensemble_energy(st, HamiltonianParams())) < 1e-12


def test_factorized_gaussian_free_energy(grid128):
    # sigma_q^2 = 1, zero phase: only the quantum log-gradient term remains,
    # hbar^2/(8 m_q sigma_q^2) = 0.125
    st = moments_to_state(gaussian_moments(sigma=((1.0, 0.0), (0.0, 0.4))), grid128)
    assert ensemble_energy(st, HamiltonianParams()) == pytest.approx(0.125, abs=1e-10)


def test_harmonic_ground_energy(grid128):
    # V_q = q^2/2, ground width sigma_q^2 = 1/2 -> total 0.5; classical sector
    # at rest in a flat V_x adds nothing
    params = HamiltonianParams(potential=PotentialSpec(v_q=(0, 0, 0.5)))
    st = moments_to_state(gaussian_moments(sigma=((0.5, 0.0), (0.0, 0.3))), grid128)
    assert ensemble_energy(st, params, 0.0) == pytest.approx(0.5, abs=1e-10)


def test_energy_matches_analytic_oracle_with_phase(grid128):
    mean = (0.2, -0.3)
    sigma = ((0.8, 0.25), (0.25, 0.9))
    s_grad = (0.3, -0.4)
    s_hess = ((0.15, -0.1), (-0.1, 0.2))
    params = HamiltonianParams(
        m_q=1.3,
        m_x=0.7,
        hbar=0.9,
        potential=PotentialSpec(v_q=(0.1, -0.2, 0.3), v_x=(0.0, 0.1, 0.25)),
        interaction_schedule=((0.0, 1.0, 0.6),),
    )
    st = moments_to_state(gaussian_moments(mean, sigma, s_grad, s_hess), grid128)
    oracle = gaussian_energy_oracle(
        sigma, mean, s_grad, s_hess,
        (1.3, 0.7, 0.9, (0.1, -0.2, 0.3), (0.0, 0.1, 0.25), 0.6),
        n=1600,
    )
    assert ensemble_energy(st, params, 0.5) == pytest.approx(oracle, rel=1e-8)


def test_flux_divergence_zero_for_constant_phase(product_state):
    field = delta_H_delta_S(product_state, HamiltonianParams())
    assert np.abs(field).max() < 1e-12


def test_flux_divergence_linear_phase_reduction(grid96):
    # S = k x: dH/dS = -(k/m_x) dP/dx with the same stencil
    k, m_x = 0.7, 1.4
    m = gaussian_moments(sigma=((0.8, 0.0), (0.0, 0.7)))
    st = moments_to_state(m, grid96)
    _, X = grid96.meshes()
    st = hybrid_state(grid96, st.P, k * X)
    params = HamiltonianParams(m_x=m_x)
    field = delta_H_delta_S(st, params)
    expect = -(k / m_x) * diff1(st.P, grid96.dx, 1)
    np.testing.assert_allclose(field, expect, atol=1e-12)


def test_flux_divergence_integrates_to_zero(grid96, rng):
    for _ in range(5):
        st = random_state(grid96, rng)
        total = delta_H_delta_S(st, HamiltonianParams()).sum() * grid96.cell
        assert abs(total) < 1e-9


def test_quantum_potential_of_unit_gaussian(grid128):
    # -(hbar^2/2m)(d_q^2 sqrt P)/sqrt P for sigma_q^2 = 1: 1/4 at q = 0,
    # zero at q^2 = 2
    st = moments_to_state(gaussian_moments(sigma=((1.0, 0.0), (0.0, 0.5))), grid128)
    field = delta_H_delta_P(st, HamiltonianParams())
    g = grid128
    jmid = g.n_x // 2
    i0 = np.argmin(np.abs(g.q))
    iroot = np.argmin(np.abs(g.q - np.sqrt(2.0)))
    # analytic quantum potential of the unit-variance Gaussian: 1/4 - q^2/8,
    # evaluated at the cell-centered grid points nearest q = 0 and q = sqrt(2)
    # (the gradient form carries an O(h^4) stencil error at this resolution)
    assert field[i0, jmid] == pytest.approx(0.25 - g.q[i0] ** 2 / 8.0, abs=5e-4)
    assert field[iroot, jmid] == pytest.approx(0.25 - g.q[iroot] ** 2 / 8.0, abs=5e-4)
    # the q^2 = 2 zero of the potential: sign change across the bracketing cells
    below = int(np.argmin(np.abs(g.q - np.sqrt(2.0) + g.dq)))
    above = int(np.argmin(np.abs(g.q - np.sqrt(2.0) - g.dq)))
    assert field[below, jmid] * field[above, jmid] < 0


def test_dhdp_uniform_periodic_zero():
    g = GridSpec(-2, 2, 32, -2, 2, 32, boundary="periodic")
    st = hybrid_state(g, np.full((32, 32), 1.0), np.zeros((32, 32)))
    assert np.abs(delta_H_delta_P(st, HamiltonianParams())).max() < 1e-12


def test_dhdp_contains_coupling_only_inside_window(product_state):
    params = HamiltonianParams(interaction_schedule=((0.0, 1.0, 2.0),))
    Q, X = product_state.grid.meshes()
    inside = delta_H_delta_P(product_state, params, t=0.5)
    outside = delta_H_delta_P(product_state, params, t=1.5)
    np.testing.assert_allclose(inside - outside, 2.0 * Q * X, atol=1e-12)


def test_dhdp_separates_for_factorized_states(product_state):
    field = delta_H_delta_P(product_state, HamiltonianParams())
    i0, j0 = np.unravel_index(np.argmax(product_state.P), field.shape)
    residual = field - field[:, j0][:, None] - field[i0, :][None, :] + field[i0, j0]
    mask = product_state.tail_mask()
    assert np.abs(residual[mask]).max() < 1e-10


def test_quadrature_consistency_energy_vs_gradient(correlated_state):
    # sum P * dH/dP reassembles the energy except that the quantum-potential
    # term integrates by parts onto the Fisher form with the same stencils
    params = HamiltonianParams(
        potential=PotentialSpec(v_q=(0.0, 0.1, 0.2), v_x=(0.0, -0.1, 0.15))
    )
    st = correlated_state
    g = st.grid
    direct = ensemble_energy(st, params)
    field = delta_H_delta_P(st, params)
    Sq = diff1(st.S, g.dq, 0)
    Sx = diff1(st.S, g.dx, 1)
    # remove the double-counted kinetic halves: P dH/dP = P[K + QP + V],
    # energy = P[K/... ] with identical kinetic and V terms; the Fisher term
    # satisfies sum P*QP = sum P*(hbar^2/8m)(d_q ln P)^2 up to boundary decay
    reassembled = (st.P * field).sum() * g.cell
    kinetic = (st.P * (Sq**2 / 2 + Sx**2 / 2)).sum() * g.cell
    assert reassembled == pytest.approx(direct, abs=1e-10)
    assert direct > kinetic * 0  # smoke: finite


def test_refinement_reduces_energy_error_at_fourth_order():
    # non-polynomial log-density so the stencil error is visible
    params = HamiltonianParams()
    vals = {}
    for n in (48, 96, 192):
        g = GridSpec(-8, 8, n, -8, 8, n)
        Q, X = g.meshes()
        P = np.exp(-0.5 * (Q**2 + X**2) + 0.25 * np.sin(1.3 * Q))
        S = 0.3 * np.sin(Q) * np.cos(0.8 * X)
        st = hybrid_state(g, P, S)
        vals[n] = ensemble_energy(st, params)
    e_coarse = abs(vals[48] - vals[192])
    e_fine = abs(vals[96] - vals[192])
    order = np.log2(e_coarse / e_fine)
    assert order > 2.0


def test_schedule_validation():
    with pytest.raises(errors.RangeError):
        HamiltonianParams(interaction_schedule=((0.0, 1.0, 1.0), (0.5, 2.0, 1.0)))
    with pytest.raises(errors.RangeError):
        HamiltonianParams(interaction_schedule=((1.0, 0.5, 1.0),))
    with pytest.raises(errors.RangeError):
        HamiltonianParams(m_q=-1.0)
    p = HamiltonianParams(interaction_schedule=((0.0, 1.0, 2.0), (2.0, 3.0, -1.0)))
    assert p.lambda_at(0.5) == 2.0
    assert p.lambda_at(1.0) == 0.0  # half-open window: off at the switch
    assert p.lambda_at(2.5) == -1.0
    assert p.lambda_at(5.0) == 0.0


def test_tabulated_potential_shape_checked(grid64):
    with pytest.raises(errors.RangeError):
        PotentialSpec(v_q=np.zeros(10)).vq_values(grid64)
    table = np.linspace(0, 1, 64)
    assert PotentialSpec(v_q=table).vq_values(grid64) is table
