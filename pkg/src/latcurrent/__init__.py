"""Stationary currents of boundary-driven, dephased free fermions on lattices.

The one-particle two-point function of the quasi-free Lindblad dynamics obeys
a closed linear equation; this package builds that generator, solves for the
stationary state, and cross-checks the current against closed forms, an
energy-integral representation and transfer-matrix (Lyapunov) asymptotics.
"""
from .closed_forms import (
    FORMULAS,
    ClosedFormResult,
    closed_form_1d,
    closed_form_dd,
    evaluate,
    strong_noise_leading,
    strong_noise_lower_bound,
    strong_noise_threshold,
    znidaric_current,
    znidaric_map,
)
from .experiments import (
    ExperimentConfig,
    Fit,
    ResultRecord,
    fit_exponential_rate,
    fit_power_law,
    run_current,
    run_sweep,
    validate,
)
from .lattice import (
    CouplingSpec,
    LatticeSpec,
    build_effective_hd,
    build_hamiltonian_1d,
    build_hamiltonian_dd,
)
from .lindblad import (
    GeneratorHandle,
    IntegrationError,
    SolverError,
    apply_generator,
    current_via_ode,
    evolve,
    generator_spectrum,
    make_generator,
    relax,
    site_current,
    stationary_current,
    stationary_solve,
    stationary_two_point,
)
from .potentials import (
    GOLDEN_ALPHA,
    PotentialSpec,
    PotentialValues,
    ValidationError,
    derived_seed,
    realization,
    sample_potential,
)
from .transfer import (
    EnergyGrid,
    LyapunovEstimate,
    corner_resolvent_fast,
    current_via_energy_integral,
    ld_deviation_probability,
    lyapunov,
    min_lyapunov,
    resolvent_entries,
    transfer_integral,
    transfer_matrix,
)

__version__ = "0.1.0"
