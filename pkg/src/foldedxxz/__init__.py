"""Exact post-flip impurity dynamics in jammed folded-XXZ backgrounds."""

from .bessel import (
    BesselWeights,
    ToleranceUnreachable,
    bessel_weights,
    position_cdf,
    position_cdf_asym,
)
from .lattice import (
    DOWN,
    UP,
    Background,
    FlipIneffectiveError,
    FlipSpec,
    GuardError,
    ImpurityBasisState,
    IndexOutOfRangeError,
    LatticeError,
    NotJammedError,
    ParticleTracker,
    SpinWindow,
    background_from_postflip,
    background_from_spins,
    coarse_xi,
    macrosite,
    neel_flip_background,
    period3_flip_background,
    periodic_flip_background,
    render,
    weak_flip_background,
    x_of_ell,
)
from .engine import (
    DiagonalObservable,
    PauliString,
    PositionStatistics,
    Profile,
    RuleDomainError,
    bipartite_entropy,
    current_operator,
    current_profile,
    down_projector_observable,
    expect_diagonal,
    expect_operator,
    expect_pauli_string,
    magnetisation_profile,
    p_down_down,
    p_down_down_profile,
    p_down_down_values,
    pauli,
    position_correlation,
    position_statistics,
    schmidt_count,
    schmidt_spectrum,
    sigma_z_element_rule,
    sigma_z_observable,
    sigma_z_time_derivative,
    sigma_z_values,
    spin_current,
    two_time_diagonal,
)
from .asymptotics import (
    OutsideConeError,
    PatternUnclassifiableError,
    asym_macrosite,
    asym_sigma_z,
    asym_sigma_z_profile,
    cone_edge_velocity,
    fit_lqjs_envelope,
    lqjs_envelope,
)
from .weak import (
    NotADensityMatrix,
    PairNotInCatalog,
    TwoSpinDensityMatrix,
    WeakConfig,
    assemble_rho,
    binary_entropy,
    concurrence,
    entanglement_map,
    eof,
    eof_from_concurrence,
    special_trajectories,
    two_point,
    two_point_engine,
    weak_magnetisation,
    weak_p_down_down,
)
from .oracle import (
    DualityReport,
    HamiltonianSpec,
    LightConeEscapeError,
    SupportOutsideChainError,
    TooLargeError,
    build_hamiltonian,
    dual_spin_string,
    duality_compare,
    entanglement_entropy,
    evolve,
    measure,
    partial_trace,
    product_state,
    sz_profile,
    zz_profile,
)

__version__ = "0.1.0"
