"""Exception types raised across the package."""


class OfdmaError(Exception):
    """Base class for all package errors."""


class ConstraintViolation(OfdmaError, ValueError):
    """Geometry radii or placement constraints are violated."""


class KindMismatch(OfdmaError, ValueError):
    """Operation requires a different layout kind."""


class InvalidParam(OfdmaError, ValueError):
    """A model parameter is outside its valid range."""


class DimensionMismatch(OfdmaError, ValueError):
    """Array shapes do not agree."""


class DomainError(OfdmaError, ValueError):
    """Argument is outside the domain where a formula is defined."""


class QuadratureFailure(OfdmaError, RuntimeError):
    """Numerical integration did not reach the requested tolerance."""


class BracketFailure(OfdmaError, RuntimeError):
    """A root could not be bracketed."""


class NoRoot(OfdmaError, ValueError):
    """A fixed-point equation has no positive root."""


class FamilyMismatch(OfdmaError, ValueError):
    """Closed form only available for a different fading family."""


class BudgetExceeded(OfdmaError, ValueError):
    """Exhaustive enumeration would exceed the allowed budget."""


class NoSolution(OfdmaError, ValueError):
    """A design-principle equation has no admissible solution."""


class Infeasible(OfdmaError, ValueError):
    """Constraint set is empty."""


class ConfigError(OfdmaError, ValueError):
    """Experiment configuration failed validation."""
