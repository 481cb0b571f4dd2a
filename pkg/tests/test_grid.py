import numpy as np
import pytest

from qchybrid import (
    GridSpec,
    HybridState,
    errors,
    gaussian_moments,
    hybrid_state,
    load_state,
    marginals,
    moments_to_state,
    normalize,
    random_state,
    save_state,
    separability_defect,
)

from oracles import AnalyticMixture, separability_defect_oracle


def test_grid_derived_quantities():
    g = GridSpec(-8, 8, 64, -4, 4, 32)
    assert g.dq == pytest.approx(0.25)
    assert g.dx == pytest.approx(0.25)
    assert len(g.q) == 64 and len(g.x) == 32
    # cell-centered samples
    assert g.q[0] == pytest.approx(-8 + 0.125)
    assert g.x[-1] == pytest.approx(4 - 0.125)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(q_min=1.0, q_max=-1.0, n_q=16, x_min=-1, x_max=1, n_x=16),
        dict(q_min=-1.0, q_max=1.0, n_q=4, x_min=-1, x_max=1, n_x=16),
        dict(q_min=-1.0, q_max=1.0, n_q=16, x_min=-1, x_max=1, n_x=16, boundary="open"),
    ],
)
def test_grid_invariants_rejected(kwargs):
    with pytest.raises(errors.RangeError):
        GridSpec(**kwargs)


def test_normalize_identity_when_already_normalized(product_state):
    out = normalize(product_state)
    np.testing.assert_allclose(out.P, product_state.P, rtol=0, atol=0)


def test_normalize_halves_doubled_density(product_state):
    doubled = HybridState(product_state.grid, 2.0 * product_state.P, product_state.S)
    out = normalize(doubled)
    np.testing.assert_allclose(out.P, product_state.P, rtol=1e-15)
    np.testing.assert_array_equal(out.S, product_state.S)


def test_normalize_bimodal_against_quadrature(grid96):
    Q, X = grid96.meshes()
    P = 3.7 * (np.exp(-((Q - 1) ** 2 + X**2)) + 0.5 * np.exp(-((Q + 1.5) ** 2 + (X - 0.5) ** 2)))
    st = normalize(HybridState(grid96, P, np.zeros_like(P)))
    assert abs(st.total_probability() - 1.0) < 1e-12


def test_normalize_idempotent(correlated_state):
    once = normalize(correlated_state)
    twice = normalize(once)
    np.testing.assert_array_equal(once.P, twice.P)


def test_normalize_zero_mass_rejected(grid64):
    zero = HybridState(grid64, np.zeros((64, 64)), np.zeros((64, 64)))
    with pytest.raises(errors.ZeroMass):
        normalize(zero)


def test_state_factory_validates_shapes_and_signs(grid64):
    good = np.full((64, 64), 1.0)
    with pytest.raises(errors.RangeError):
        hybrid_state(grid64, good[:32], good)
    with pytest.raises(errors.NegativeDensity):
        hybrid_state(grid64, -good, good)
    bad = good.copy()
    bad[0, 0] = np.nan
    with pytest.raises(errors.NonFinite):
        hybrid_state(grid64, bad, good)


def test_marginals_of_product_state_recover_factors(product_state):
    P_q, P_x = marginals(product_state)
    g = product_state.grid
    assert abs(P_q.sum() * g.dq - 1.0) < 1e-9
    assert abs(P_x.sum() * g.dx - 1.0) < 1e-9
    np.testing.assert_allclose(np.outer(P_q, P_x), product_state.P, atol=1e-12)


def test_marginals_uniform_state():
    g = GridSpec(-2, 2, 32, -2, 2, 32, boundary="periodic")
    st = hybrid_state(g, np.full((32, 32), 1.0), np.zeros((32, 32)))
    P_q, P_x = marginals(st)
    np.testing.assert_allclose(P_q, 0.25, rtol=1e-12)
    np.testing.assert_allclose(P_x, 0.25, rtol=1e-12)


def test_marginals_of_correlated_gaussian_are_unit_variance(grid96):
    # joint sigma_q^2 = sigma_x^2 = 1 with covariance 0.5: both marginals are
    # unit-variance Gaussians regardless of the correlation
    m = gaussian_moments(sigma=((1.0, 0.5), (0.5, 1.0)))
    st = moments_to_state(m, grid96)
    P_q, P_x = marginals(st)
    g = st.grid
    var_q = (P_q * g.q**2).sum() * g.dq
    var_x = (P_x * g.x**2).sum() * g.dx
    assert abs(var_q - 1.0) < 1e-9
    assert abs(var_x - 1.0) < 1e-9


def test_separability_defect_zero_for_products(product_state):
    assert separability_defect(product_state) < 1e-10


def test_separability_defect_correlated_gaussian_matches_oracle(grid128):
    m = gaussian_moments(mean=(0.0, 1.0), sigma=((1.0, 0.5), (0.5, 1.0)))
    st = moments_to_state(m, grid128)
    oracle = separability_defect_oracle(
        AnalyticMixture([(0.0, 1.0)], [((1.0, 0.5), (0.5, 1.0))], [1.0]), n=1600
    )
    assert oracle == pytest.approx(0.3692169, abs=2e-6)  # frozen fine-quadrature value
    assert separability_defect(st) == pytest.approx(oracle, abs=2e-4)


def test_separability_defect_disjoint_mixture_positive(grid96):
    mix = AnalyticMixture(
        [(2.5, 2.5), (-2.5, -2.5)],
        [((0.2, 0.0), (0.0, 0.2))] * 2,
        [0.5, 0.5],
    )
    Q, X = grid96.meshes()
    st = hybrid_state(grid96, mix.density(Q, X), np.zeros_like(Q))
    oracle = separability_defect_oracle(mix, n=1600)
    assert oracle > 0.9  # strongly correlated bimodal state
    assert separability_defect(st) == pytest.approx(oracle, rel=1e-3)


def test_separability_defect_mirror_invariant(correlated_state):
    st = correlated_state
    mirrored = HybridState(st.grid, st.P[::-1, :].copy(), st.S[::-1, :].copy())
    assert separability_defect(mirrored) == pytest.approx(separability_defect(st), abs=1e-12)


def test_checkpoint_roundtrip(tmp_path, correlated_state):
    path = tmp_path / "state.chk"
    save_state(correlated_state, path)
    back = load_state(path)
    assert back.grid == correlated_state.grid
    np.testing.assert_allclose(back.P, correlated_state.P, rtol=1e-15)
    np.testing.assert_allclose(back.S, correlated_state.S, rtol=0, atol=1e-15)


def test_random_states_are_valid_and_decayed(grid96, rng):
    for _ in range(5):
        st = random_state(grid96, rng)
        st.validate()
        edge = max(st.P[0].max(), st.P[-1].max(), st.P[:, 0].max(), st.P[:, -1].max())
        assert edge < 1e-12 * st.P.max()
