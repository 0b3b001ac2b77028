"""Exception hierarchy shared by all stielap modules.

Validation errors (bad input documents, violated preconditions) map to CLI
exit code 1; numerical failures (series that refuse to converge, solvers
that stall) map to exit code 2.
"""


class StielapError(Exception):
    """Base class for all package errors."""


class ValidationError(StielapError):
    """Bad input: rejected before any numerics run."""


class NumericalError(StielapError):
    """The computation itself failed to meet its contract."""


class SchemaError(ValidationError):
    """Measure-spec document is malformed."""


class InvariantError(ValidationError):
    """Measure-spec document violates a structural invariant."""


class IntervalMismatch(ValidationError):
    """Interval kind incompatible with the measure's side convention."""


class ZeroIncrement(NumericalError):
    """A derivative cell carries no measure mass.

    Carries the offending cell index in ``args[1]`` when available.
    """


class TruncationNotConverged(NumericalError):
    """Series truncation bound exceeds the requested tolerance."""


class DegenerateSpan(NumericalError):
    """Null-space vectors of a multiplicity-2 eigenspace are numerically parallel."""


class CoefficientNotPositive(ValidationError):
    """Diffusion coefficient not bounded away from zero, or kappa negative."""


class ConvergenceFailure(NumericalError):
    """Iterative eigenvalue/linear solver did not converge."""


class SolvabilityViolation(ValidationError):
    """kappa == 0 requires a zero-mean right-hand side."""


class SingularSystem(NumericalError):
    """Linear system is singular beyond the kappa == 0 constant kernel."""


class BoundaryViolation(ValidationError):
    """Function does not vanish at the tagged origin."""


class BetaTooSmall(ValidationError):
    """Fractional exponent beta <= d/4: the field variance diverges."""


class AxisCoverageInsufficient(ValidationError):
    """A per-axis eigenbasis does not reach the requested tensor cutoff."""
