"""Convergence-rate bounds for push-sum gossip protocols.

The package evaluates an almost-sure convergence-rate bound for
push-sum averaging under randomized communication with homogeneous
correlation structure, optimizes the transmission intensity, and
cross-checks the bound against an exact second-moment operator
iteration and Monte Carlo simulation.
"""

from ._kernels import BACKEND
from .config import RunConfig, load_config_file, merge_config
from .errors import (
    InputFormatError,
    InternalInvariantError,
    PushSumRateError,
    SeparationError,
    ValidationError,
)
from .graphs import (
    Graph,
    HomogeneityReport,
    MixingMatrix,
    build_mixing_matrix,
    check_homogeneity,
    circulant_graph,
    complete_graph,
    cycle_graph,
    load_graph,
    make_graph,
    path_graph,
    petersen_graph,
    star_graph,
)
from .optimize import (
    ConvexityReport,
    OptimizationResult,
    SweepRow,
    SweepTable,
    convexity_probe,
    minimize_rate,
    sweep,
)
from .params import CorrelationParams, require_valid, validate_params
from .phi import (
    MuTrajectory,
    PhiModel,
    PhiPropertyFailure,
    PhiPropertyReport,
    PhiTrajectory,
    SymMatrixState,
    centering_state,
    check_phi_properties,
    eigen_recursion,
    expect_cxc,
    expect_dxc,
    expect_dxd,
    homogeneous_phi_model,
    iterate_phi,
    phi_model_from_params,
    phi_star,
    psi,
    psi_inv,
)
from .rate import (
    EndpointSlopes,
    RatePoint,
    SecularCoefficients,
    companion_matrix,
    delta_argmax_check,
    delta_derivative,
    endpoint_slopes,
    largest_root,
    largest_root_from_coefficients,
    secular_coefficients,
    secular_roots_all,
    secular_value,
    xi_derivative,
)
from .simulate import (
    MomentEstimate,
    ProtocolSpec,
    PushSumRun,
    build_a,
    empirical_rate,
    estimate_moments,
    phi_star_mc,
    protocol_params,
    run_pushsum,
    sample_c,
)
from .spectral import Spectrum, spectrum_residuals, symmetric_eigen

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConvexityReport",
    "CorrelationParams",
    "EndpointSlopes",
    "Graph",
    "HomogeneityReport",
    "InputFormatError",
    "InternalInvariantError",
    "MixingMatrix",
    "MomentEstimate",
    "MuTrajectory",
    "OptimizationResult",
    "PhiModel",
    "PhiPropertyFailure",
    "PhiPropertyReport",
    "PhiTrajectory",
    "ProtocolSpec",
    "PushSumRateError",
    "PushSumRun",
    "RatePoint",
    "RunConfig",
    "SecularCoefficients",
    "SeparationError",
    "Spectrum",
    "SweepRow",
    "SweepTable",
    "SymMatrixState",
    "ValidationError",
    "build_a",
    "build_mixing_matrix",
    "centering_state",
    "check_homogeneity",
    "check_phi_properties",
    "circulant_graph",
    "companion_matrix",
    "complete_graph",
    "convexity_probe",
    "cycle_graph",
    "delta_argmax_check",
    "delta_derivative",
    "eigen_recursion",
    "empirical_rate",
    "endpoint_slopes",
    "estimate_moments",
    "expect_cxc",
    "expect_dxc",
    "expect_dxd",
    "homogeneous_phi_model",
    "iterate_phi",
    "largest_root",
    "largest_root_from_coefficients",
    "load_config_file",
    "load_graph",
    "make_graph",
    "merge_config",
    "minimize_rate",
    "path_graph",
    "petersen_graph",
    "phi_model_from_params",
    "phi_star",
    "phi_star_mc",
    "protocol_params",
    "psi",
    "psi_inv",
    "require_valid",
    "run_pushsum",
    "sample_c",
    "secular_coefficients",
    "secular_roots_all",
    "secular_value",
    "spectrum_residuals",
    "star_graph",
    "sweep",
    "symmetric_eigen",
    "validate_params",
    "xi_derivative",
    "__version__",
]
