"""bkdisk: radial balanced weights on the unit disk, at high precision.

Computes weighted moments and diagonal kernels for radial weights,
verifies the balancing identity whose unique analytic fixed point is the
hyperbolic weight ``lambda (1 - x)``, runs the damped balancing iteration,
performs boundary asymptotics diagnostics, and scans the n-dimensional
identity on the simplex.
"""

from .backend import Backend, DEFAULT_PRECISION_BITS, EXACT, float_backend
from .balancing import (
    IterationStep,
    IterationTrace,
    ResidualReport,
    balancing_map,
    difference_residual,
    height_factor,
    iterate,
    kernel_series,
    normalize_lambda,
    residual,
    residual_grid,
    weighted_moment_table,
)
from .asymptotics import (
    AsymptoticsReport,
    BoundaryProfile,
    DecayResult,
    GrowthWitnessResult,
    defect_sequence,
    asymptotics_report,
    boundary_profile,
    decay_diagnostic,
    growth_witness_check,
    analytic_remainder,
)
from .errors import (
    AlphaTooSmall,
    BackendMismatch,
    BackendParse,
    BkdiskError,
    DegreeOverflow,
    ExactBackendFractionalPower,
    KTooLarge,
    NonpositiveConstantTerm,
    NonpositiveMoment,
    NonpositiveWeight,
    OrderExceedsTable,
    PositivityLost,
    SingularProfile,
    UntrustedTail,
    VarCountMismatch,
)
from .geometry import (
    KernelDiagnostic,
    PotentialProfile,
    balanced_check,
    basis_norms,
    kernel_diagonal,
    metric_coefficient,
)
from .moments import (
    MomentTable,
    MultiIndex,
    graded_lex_indices,
    ibp_expansion,
    moment,
    moment_table,
    simplex_moment,
    simplex_moment_table,
    simplex_monomial_integral,
    table_from_json,
    table_to_csv,
    table_to_json,
)
from .series import (
    TailBound,
    TruncatedSeries,
    differentiate,
    log_series,
    recenter_at_one,
    series_add,
    series_arith,
    series_eval,
    series_from_json,
    series_make,
    series_mul,
    series_power,
    series_scale,
    series_sub,
    series_to_json,
)
from .weights import (
    RadialWeight,
    flat_simplex_weight,
    hyperbolic_weight,
    make_weight,
    simplex_grid,
    to_float_weight,
    unit_interval_grid,
    weight_from_json,
    weight_to_json,
)

__version__ = "0.1.0"
