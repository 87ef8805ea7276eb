"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to, so the codes
stay stable no matter where in the library the failure originates.
"""

from __future__ import annotations


class DesignError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ValidationError(DesignError, ValueError):
    """Invalid user input: design invariants, configuration, data shape."""

    exit_code = 1


class NoRootError(DesignError):
    """A root finder found no sign change in its bracket."""

    exit_code = 2


class SingularWError(NoRootError):
    """W vanishes inside the bracket and no valid companion root exists."""


class DomainError(DesignError, ValueError):
    """A linear predictor value falls outside the link's domain."""

    exit_code = 3


class NumericalRangeError(DomainError):
    """A log-space quantity is not finite."""


class PoleError(DomainError):
    """Evaluation at a pole of a rational expression."""


class InversionError(ValidationError):
    """The predictor has no closed-form inverse."""


class InfeasibleError(DesignError):
    """Every candidate design is singular or the design space is empty."""

    exit_code = 4


class SingularDesignError(DesignError):
    """The information matrix (or a required block of it) is singular."""

    exit_code = 5


class SeparationError(DesignError):
    """Complete or quasi-complete separation: the MLE does not exist."""

    exit_code = 6


class DataFormatError(ValidationError):
    """Malformed data file."""

    exit_code = 7


class MultipleRootsWarning(UserWarning):
    """More than one sign change was found while solving an equation."""
