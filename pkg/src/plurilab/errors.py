"""Exception types shared across the package."""


class PlurilabError(Exception):
    """Base class for all errors raised by plurilab."""


class SizeMismatchError(PlurilabError, ValueError):
    pass


class DegreeTooLargeError(PlurilabError, OverflowError):
    pass


class SingularConfigurationError(PlurilabError, ArithmeticError):
    """The evaluation matrix is singular (two points coincide or worse)."""


class AdmissibilityError(PlurilabError, ValueError):
    """(weight, base measure, beta) fails the growth condition."""


class ClassificationError(PlurilabError, ValueError):
    """Tail behaviour of a custom weight cannot be classified."""


class ConvergenceError(PlurilabError, RuntimeError):
    pass


class GridError(PlurilabError, ValueError):
    pass


class StepSizeError(PlurilabError, RuntimeError):
    pass


class BadInitError(PlurilabError, RuntimeError):
    pass


class SearchFailureError(PlurilabError, RuntimeError):
    pass


class ConditionError(PlurilabError, ArithmeticError):
    """Gram matrix too ill-conditioned to factor."""


class ProposalFailureError(PlurilabError, RuntimeError):
    pass


class InsufficientSamplesError(PlurilabError, ValueError):
    pass


class ConfigError(PlurilabError, ValueError):
    pass


class SchemaError(PlurilabError, ValueError):
    pass


class DegenerateDegreeError(PlurilabError, ValueError):
    """k = 0 where a 1/k normalization is needed."""


class GeometryError(PlurilabError, ValueError):
    """Convex body is degenerate or does not contain the origin in its interior."""


class SolverFailureError(PlurilabError, RuntimeError):
    """An optimization backend returned an infeasible or inconsistent answer."""
