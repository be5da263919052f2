"""Numerical laboratory for partially dissipative hyperbolic systems.

Three layers: structural certification of a symmetric system (kernel
coupling condition, uniform spectral gap, compensating matrices and the
perturbed energy they define), linear and semilinear spectral solvers on
periodic grids and on whole-space radial profiles, and decay-rate
measurement with comparison against the predicted exponents.
"""

from .dyadic import (
    BesovSpec,
    DyadicPartition,
    annulus_profile,
    besov_norm,
    block_norms,
    dyadic_dilate,
    frac_laplacian,
    low_pass_profile,
    lp_block,
    make_partition,
    psi_block,
    smooth_step,
)
from .euler import (
    AdmissibilityError,
    EulerModel,
    damped_euler_model,
    euler_normal_form_rhs,
    linearize_damped_euler,
)
from .fitting import (
    DecayFit,
    ExponentialFit,
    TheoryComparison,
    compare_with_theory,
    fit_decay,
    fit_exponential_decay,
    gamma_pq,
    predicted_exponent,
)
from .grids import (
    Grid,
    GridField,
    apply_multiplier,
    field_from_spectrum,
    field_from_values,
    gradient,
    l2_norm_spectral,
    lp_norm,
    random_band_field,
    read_field,
    two_thirds_mask,
    write_field,
)
from .inequalities import (
    RatioReport,
    band_limited_samples,
    bernstein_block_ratios,
    box_dilate,
    gns_check,
    lp_embedding_check,
    verify_interpolation_suite,
)
from .linear import (
    DuhamelStepper,
    NormHistory,
    RadialInitialData,
    duhamel_step,
    high_low_split,
    phi1,
    solve_linear_grid,
    solve_linear_radial,
)
from .quadrature import log_radial_rule, sphere_rule
from .report import (
    ExperimentError,
    ExperimentReport,
    builtin_system,
    run_batch,
    run_experiment,
)
from .simulate import (
    SimulationAbort,
    SimulationConfig,
    Trajectory,
    initial_data,
    orthogonal_part,
    read_trajectory,
    simulate_damped_euler,
    time_weighted_functionals,
    write_trajectory,
)
from .spectral import (
    CompensatingMatrix,
    CompensatorFamily,
    CompensatorSynthesisError,
    FourierSymbol,
    KernelConditionReport,
    SpectralError,
    SpectralGapReport,
    build_compensating_matrix,
    build_compensator_family,
    check_sk_kernel,
    lyapunov_energy,
    lyapunov_equivalence,
    pencil_eigenvalues,
    semigroup,
    spectral_gap_fit,
    symbol,
)
from .systems import (
    LinearDissipativeSystem,
    ValidationReport,
    make_system,
    read_system,
    validate_symmetric_dissipative,
    write_system,
)

__version__ = "0.1.0"
