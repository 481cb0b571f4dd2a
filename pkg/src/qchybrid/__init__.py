"""Configuration-space simulator for coupled quantum-classical ensembles."""

from . import errors
from .grid import (
    GridSpec,
    HybridState,
    hybrid_state,
    load_state,
    marginals,
    normalize,
    random_state,
    save_state,
    separability_defect,
)
from .hamiltonian import (
    HamiltonianParams,
    PotentialSpec,
    delta_H_delta_P,
    delta_H_delta_S,
    ensemble_energy,
)
from .observables import (
    Observable,
    classical_expectation,
    classical_momentum_moments,
    classical_poly,
    obs_kinetic,
    obs_potential_q,
    obs_pq,
    obs_pq2,
    obs_px,
    obs_px2,
    obs_q,
    obs_q2,
    obs_x,
    obs_x2,
    quantum_expectation,
)
from .brackets import (
    FunctionalHandle,
    canonical_transform,
    d2dt2_x2_free,
    jacobi_residual,
    nested_bracket,
    poisson_bracket,
    second_derivative_decomposition,
    signal_integral,
)
from .dynamics import IntegratorSpec, RunRecord, evolve, stability_limit, step
from .gaussian import (
    GaussianMoments,
    derive_moment_flow,
    evolve_moments,
    evolve_moments_record,
    gaussian_moments,
    moments_to_state,
    state_to_moments,
)
from .experiments import (
    Branch,
    Protocol,
    SignalReport,
    control_protocol,
    default_protocol,
    half_ensemble_detection,
    onset_analysis,
    run_signaling,
)
from .config import RunConfig, parse_config

__version__ = "0.1.0"
