"""Noncommutative optimal transport on matrix algebras.

Spectral calculus with logarithmic-mean multiplication operators,
commutator derivations with heat flow and ergodicity diagnostics,
relative entropy and curvature estimates, a discrete Benamou-Brenier
geodesic solver, and transport over finite matrix-algebra bundles.
"""

from .bundle import (
    AssembledPath,
    DisintegrationResult,
    FiberedDensity,
    FiniteBase,
    MeanCurvatureReport,
    VerticalGradient,
    assemble_global_path,
    disintegrated_distance,
    fiber_masses,
    mean_curvature_check,
    mean_entropy,
    monolithic_distance,
    product_trace,
)
from .derivation import Derivation, divergence, grad, heat, is_ergodic, laplacian, spectral_gap
from .entropy import (
    CurvatureReport,
    curvature_gap,
    entropy,
    entropy_dissipation,
    estimate_curvature,
)
from .errors import (
    DegeneratePairError,
    DimensionMismatchError,
    DomainError,
    EigensolverError,
    InvalidPathError,
    NcotError,
    ParseError,
    SingularityError,
    UsageError,
)
from .kernels import DLOG, LOG_MEAN, TwoVariableKernel, dlog, log_mean, quantum_derivative
from .spectral import (
    DensityMatrix,
    HermitianMatrix,
    SpectralDecomposition,
    dlog_solve,
    eig,
    func_calc,
    mult_op,
    positive_part,
    schur_apply,
    xlogx,
)
from .superop import Superoperator, unvec, vec
from .transport import (
    PathInfeasibility,
    SolverConfig,
    TransportPath,
    TransportResult,
    linear_path,
    onsager,
    path_energy,
    s_operator,
    solve_block_geodesic,
    solve_geodesic,
    tangent_metric,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledPath",
    "CurvatureReport",
    "DegeneratePairError",
    "DensityMatrix",
    "Derivation",
    "DimensionMismatchError",
    "DisintegrationResult",
    "DLOG",
    "DomainError",
    "EigensolverError",
    "FiberedDensity",
    "FiniteBase",
    "HermitianMatrix",
    "InvalidPathError",
    "LOG_MEAN",
    "MeanCurvatureReport",
    "NcotError",
    "ParseError",
    "PathInfeasibility",
    "SingularityError",
    "SolverConfig",
    "SpectralDecomposition",
    "Superoperator",
    "TransportPath",
    "TransportResult",
    "TwoVariableKernel",
    "UsageError",
    "VerticalGradient",
    "assemble_global_path",
    "curvature_gap",
    "disintegrated_distance",
    "divergence",
    "dlog",
    "dlog_solve",
    "eig",
    "entropy",
    "entropy_dissipation",
    "estimate_curvature",
    "fiber_masses",
    "func_calc",
    "grad",
    "heat",
    "is_ergodic",
    "laplacian",
    "linear_path",
    "log_mean",
    "mean_curvature_check",
    "mean_entropy",
    "monolithic_distance",
    "mult_op",
    "onsager",
    "path_energy",
    "positive_part",
    "product_trace",
    "quantum_derivative",
    "s_operator",
    "schur_apply",
    "solve_block_geodesic",
    "solve_geodesic",
    "spectral_gap",
    "tangent_metric",
    "unvec",
    "vec",
    "xlogx",
]
