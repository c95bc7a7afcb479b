"""Exception types shared across the package.

Validation errors (bad inputs) and solver errors (failures during a solve)
are kept in separate branches so the CLI can map them to distinct exit codes.
"""


class ClassoError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ClassoError):
    """Base class for errors caused by ill-formed inputs."""


class SolverError(ClassoError):
    """Base class for errors raised during a solve."""


class DimensionMismatch(ValidationError):
    """Array shapes are inconsistent with each other."""


class RankDeficientConstraints(ValidationError):
    """A constraint matrix is numerically row-rank deficient."""


class NeedsRidge(ValidationError):
    """The design lacks full column rank and no ridge weight was given.

    Callers should either supply epsilon > 0 or use a solver that augments
    transparently.
    """


class MissingVarianceEstimate(ValidationError):
    """Mallows' Cp was requested without a noise variance estimate."""


class InvalidSize(ValidationError):
    """A builder was asked for a dimension it cannot produce."""


class InvalidScenario(ValidationError):
    """A simulation scenario violates its own size requirements."""


class ConstraintViolated(ValidationError):
    """A candidate point violates constraints beyond tolerance."""


class Infeasible(SolverError):
    """The constraint polyhedron is empty."""


class Unbounded(SolverError):
    """The objective decreases without bound over the feasible set."""


class MaxIterations(SolverError):
    """An iterative solver hit its iteration cap before converging."""


class SingularSystem(SolverError):
    """A linear system that is assumed nonsingular turned out singular."""


class InitializationFailed(SolverError):
    """Path initialization could not produce a consistent starting state."""
