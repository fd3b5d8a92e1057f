"""Spectral solver for heat-type equations run forward and backward.

Forward Cauchy and initial-boundary value problems on an interval (or
rectangle, homogeneous case) in the Dirichlet eigenbasis; backward final
value problems through exact mode-wise inversion guarded by a compatibility
heuristic; graph norms of the admissible data space; and a dense-matrix lab
for the semigroup properties the construction rests on.
"""

from .boundary import (
    BoundaryData,
    BoundarySplit,
    HarmonicLift,
    InhomSolution,
    LiftPath,
    SweepReport,
    Y1NormReport,
    assemble_with_lift_perturbation,
    boundary_split,
    boundary_yield,
    boundary_yield_sweep,
    data_norm_inhom,
    flow_identity_residual,
    harmonic_lift,
    partial_boundary_yield,
    solution_norm_h1,
    solve_final_value_inhom,
    solve_ibvp,
    trace_norm_surrogate,
)
from .duhamel import (
    EnergyReport,
    SourceTerm,
    Trajectory,
    check_energy_estimate,
    solution_norm,
    solve_cauchy,
    source_yield,
    squared_source_dual_norm,
)
from .fdoracle import CflViolationError, FdResult, FdScheme, fd_solve
from .fvp import (
    FinalValueData,
    FvpSolution,
    IncompatibleDataError,
    InconclusiveDataError,
    YNormReport,
    data_norm,
    instability_csv,
    instability_table,
    solve_final_value,
    theoretical_stability_constant,
)
from .generator import (
    ChainReport,
    ConvexityReport,
    GeneratorReport,
    MatrixGenerator,
    SectorReport,
    SectorSpec,
    check_decay,
    check_injectivity,
    check_logconvexity_criterion,
    check_sectoriality,
    exp_semigroup,
    format_matrix,
    inverse_chain_demo,
    logconvexity_profile,
    parse_matrix,
    random_elliptic,
    random_selfadjoint,
)
from .logspace import LOG_MAX, kahan_sum, log_sum_exp, logspace_add, merge_phase, split_phase
from .semigroup import (
    CompatReport,
    HeightProfile,
    MembershipPolicy,
    SemigroupAction,
    apply_forward,
    apply_inverse,
    check_domain_membership,
    height_function,
)
from .spectral import (
    DomainSpec,
    EigenBasis,
    GridMismatchError,
    InvalidSpecError,
    SpectralVec,
    TripleNorms,
    analyze,
    build_basis,
    norm_h,
    project_samples,
    rel_distance,
    synthesize,
    triple_norms,
    vec_from_json,
    vec_to_json,
)

__version__ = "0.1.0"
