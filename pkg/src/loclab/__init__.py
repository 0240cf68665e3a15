"""loclab: certified localization diagnostics for finite quantum Hamiltonians.

Build a site space, put an operator on it, diagonalize, then interrogate the
eigendata: weighted transport moments with Cesaro and Abel time averages,
projector mass ledgers, and majorant-style decay envelopes for eigenvector,
projector, and kernel profiles.  Counterexample families (Landau lowest
level, separated cluster sums) probe where the pointwise bounds must break.
"""

__version__ = "0.1.0"

from .geometry import (
    GeometryError,
    GrowthProfile,
    SiteSpace,
    binary_tree_edges,
    build_site_space,
    graph_space,
    indicator,
    lattice_box,
    lattice_subset,
    linear_chain,
    polynomial_tree_edges,
    read_edge_file,
    space_from_dict,
    space_to_dict,
    sphere_census,
)
from .operators import (
    Hamiltonian,
    OperatorError,
    WeightOperator,
    build_anderson,
    build_cluster_laplacian,
    build_laplacian,
    build_weight,
    gershgorin_norm,
    load_hamiltonian,
    save_hamiltonian,
)
from .spectral import (
    AlphaWeights,
    ProjectorGroup,
    SpectralData,
    SpectralError,
    alpha_weights,
    default_group_tol,
    diagonalize,
    group_column,
    group_projectors,
    group_row_norms,
    load_spectral,
    projector_kernel,
    save_spectral,
    window_groups,
)
from .dynamics import (
    DecayParams,
    DynamicsError,
    EnergyWindow,
    MomentSeries,
    abel_average,
    cesaro_average,
    default_time_grid,
    evolved_kernel,
    evolved_state,
    full_window,
    liminf_cesaro,
    make_window,
    moment,
    moment_series,
    moment_values,
    save_moment_series,
)
from .diagnostics import (
    CenterCensus,
    DecayFit,
    DiagnosticsError,
    KernelInterpolation,
    LocalizationCenter,
    ProjectorMassLedger,
    SudecPlusResult,
    SudecResult,
    SuleFit,
    SulpProfile,
    ak_ledger,
    alpha_center_bound,
    array_batches,
    center_census,
    center_cluster_check,
    fit_certified_envelope,
    kernel_interpolation_check,
    localization_centers,
    mixed_exponent_check,
    random_orthogonal,
    random_rotations,
    required_constant,
    rotate_group,
    sudec_check,
    sudec_plus_check,
    sule_fit,
    sulp_profile,
)
from .counterexamples import (
    ClusterComparison,
    LandauViolation,
    blockwise_spectral,
    cluster_suleplus_violation,
    landau_amplitude,
    landau_norm_quadrature,
    landau_opposite_product,
    landau_peak_radius,
    landau_sudec_violation,
    mixing_matrix,
    rotate_cluster_basis,
)
from .ensemble import (
    EnsembleKernelDecay,
    EnsembleMoments,
    TranslationCheck,
    ensemble_kernel_decay,
    ensemble_moments,
    realization_seed,
    translation_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
