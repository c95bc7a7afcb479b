"""Constrained lasso solvers.

Lasso regression under linear equality and inequality constraints
(A beta = b, C beta <= d), with three interchangeable algorithms:

* quadratic programming (:func:`classo_qp`),
* consensus ADMM (:func:`solve_admm`),
* an exact piecewise-linear solution path (:func:`solve_path`),

plus the transformation that reduces any generalized lasso to a constrained
lasso (:mod:`classo.genlasso`), scikit-learn style estimators
(:class:`ConstrainedLasso`, :class:`GeneralizedLasso`), a simulation /
benchmark harness, and a command-line interface (``classo``).
"""

from .admm import AdmmOptions, AdmmState, lasso_prox, solve_admm
from .convex import (
    ConvexSolution,
    PolyhedronProjector,
    QuadraticProgram,
    classo_qp,
    project_polyhedron,
    solve_lp,
    solve_qp,
)
from .errors import (
    ClassoError,
    ConstraintViolated,
    DimensionMismatch,
    Infeasible,
    InitializationFailed,
    InvalidScenario,
    InvalidSize,
    MaxIterations,
    MissingVarianceEstimate,
    NeedsRidge,
    RankDeficientConstraints,
    SingularSystem,
    SolverError,
    Unbounded,
    ValidationError,
)
from .estimators import ConstrainedLasso, GeneralizedLasso
from .genlasso import (
    GenLassoFit,
    GenLassoPath,
    GenLassoProblem,
    GenLassoTransform,
    back_transform,
    build_penalty,
    genlasso_objective,
    solve_genlasso,
    transform,
)
from .harness import BenchmarkReport, Scenario, generate, run_benchmark
from .model import (
    ConstraintBlock,
    FitResult,
    InformationCriteria,
    KktResiduals,
    Problem,
    augment_ridge,
    build_constraints,
    degrees_of_freedom,
    information_criteria,
    kkt_residual,
    objective,
    stack_constraints,
    validate,
)
from .path import (
    Kink,
    PathDirection,
    PathOptions,
    PathState,
    SolutionPath,
    initialize_path,
    interpolate,
    next_event,
    path_direction,
    solve_path,
)

__version__ = "0.1.0"

__all__ = [
    "AdmmOptions", "AdmmState", "lasso_prox", "solve_admm",
    "ConvexSolution", "PolyhedronProjector", "QuadraticProgram", "classo_qp",
    "project_polyhedron", "solve_lp", "solve_qp",
    "ClassoError", "ConstraintViolated", "DimensionMismatch", "Infeasible",
    "InitializationFailed", "InvalidScenario", "InvalidSize", "MaxIterations",
    "MissingVarianceEstimate", "NeedsRidge", "RankDeficientConstraints",
    "SingularSystem", "SolverError", "Unbounded", "ValidationError",
    "ConstrainedLasso", "GeneralizedLasso",
    "GenLassoFit", "GenLassoPath", "GenLassoProblem", "GenLassoTransform",
    "back_transform", "build_penalty", "genlasso_objective", "solve_genlasso",
    "transform",
    "BenchmarkReport", "Scenario", "generate", "run_benchmark",
    "ConstraintBlock", "FitResult", "InformationCriteria", "KktResiduals",
    "Problem", "augment_ridge", "build_constraints", "degrees_of_freedom",
    "information_criteria", "kkt_residual", "objective", "stack_constraints",
    "validate",
    "Kink", "PathDirection", "PathOptions", "PathState", "SolutionPath",
    "initialize_path", "interpolate", "next_event", "path_direction",
    "solve_path",
    "__version__",
]
