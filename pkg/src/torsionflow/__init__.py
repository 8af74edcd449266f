"""Numerical toolkit for the Minkowski problem of the k-torsional rigidity.

A convex body is represented by its support function on a sphere grid.  The
package solves the interior problem ``S_k(D^2 u) = 1``, evaluates the
torsional rigidity and measure, runs the normalized curvature flow whose
fixed points solve ``f = tau |Du|^{k+1} sigma_{n-k}``, and checks the
underlying identities numerically.
"""

from .errors import (
    CapabilityError,
    ConfigError,
    ConvexityError,
    GridMismatchError,
    GridSizeError,
    SolverError,
    StiffnessError,
    TorsionFlowError,
)
from .sphere import (
    CurvatureData,
    SphereGrid,
    SupportField,
    ball,
    boundary_embedding,
    check_convex,
    convexity_margin,
    curvature_data,
    curvature_radii,
    elementary_symmetric,
    ellipse,
    fourier_body,
    is_certified_convex,
    minkowski_combination,
    radial_from_support,
)
from .interior import (
    InteriorSolution,
    MfsConfig,
    ball_solution,
    boundary_gradient,
    hessian_residual,
    interior_solve,
    solve_poisson_mfs,
)
from .functionals import (
    FunctionalReport,
    eta_normalization,
    functional_report,
    phi_functional,
    pohozaev_consistency,
    torsional_measure_density,
    torsional_rigidity_boundary,
    torsional_rigidity_volume,
)
from .flow import (
    DensityField,
    FlowConfig,
    FlowResult,
    FlowState,
    diagnostics,
    evaluate,
    flow_rhs,
    initial_state,
    run,
    step,
)
from .lab import (
    IdentityReport,
    hadamard_fd_check,
    hadamard_sweep,
    lemma45_identities,
    monotonicity_audit,
    phi_invariance_audit,
    verification_battery,
)
from .config import RunConfig, parse_config
from .storage import emit_plotdata, read_snapshot, read_timeseries, write_snapshot, write_timeseries
from .cli import orchestrate

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "ConfigError",
    "ConvexityError",
    "GridMismatchError",
    "GridSizeError",
    "SolverError",
    "StiffnessError",
    "TorsionFlowError",
    "CurvatureData",
    "SphereGrid",
    "SupportField",
    "ball",
    "boundary_embedding",
    "check_convex",
    "convexity_margin",
    "curvature_data",
    "curvature_radii",
    "elementary_symmetric",
    "ellipse",
    "fourier_body",
    "is_certified_convex",
    "minkowski_combination",
    "radial_from_support",
    "InteriorSolution",
    "MfsConfig",
    "ball_solution",
    "boundary_gradient",
    "hessian_residual",
    "interior_solve",
    "solve_poisson_mfs",
    "FunctionalReport",
    "eta_normalization",
    "functional_report",
    "phi_functional",
    "pohozaev_consistency",
    "torsional_measure_density",
    "torsional_rigidity_boundary",
    "torsional_rigidity_volume",
    "DensityField",
    "FlowConfig",
    "FlowResult",
    "FlowState",
    "diagnostics",
    "evaluate",
    "flow_rhs",
    "initial_state",
    "run",
    "step",
    "IdentityReport",
    "hadamard_fd_check",
    "hadamard_sweep",
    "lemma45_identities",
    "monotonicity_audit",
    "phi_invariance_audit",
    "verification_battery",
    "RunConfig",
    "parse_config",
    "emit_plotdata",
    "read_snapshot",
    "read_timeseries",
    "write_snapshot",
    "write_timeseries",
    "orchestrate",
]
