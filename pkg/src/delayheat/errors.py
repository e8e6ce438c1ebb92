"""Exception hierarchy.

Two families matter to callers: :class:`InputError` for invalid problem
descriptions or configuration, and :class:`NumericalFailure` for runs that are
well posed mathematically but break down in floating point.  The CLI maps the first
to exit code 2 and the second to exit code 3.
"""

from __future__ import annotations


class InputError(ValueError):
    """Invalid problem description, data, or configuration."""


class NumericalFailure(ArithmeticError):
    """A computation left the range where floating point can represent it."""

    def __init__(self, message: str, mode: int | None = None):
        super().__init__(message)
        self.mode = mode


class ProportionalityViolation(InputError):
    """Drift coefficients admit no common substitution exponent."""


class CompatibilityViolation(InputError):
    """History, boundary, or target data disagree at a domain corner."""

    def __init__(self, message: str, where: tuple[float, float] | None = None):
        super().__init__(message)
        self.where = where


class MissingTarget(InputError):
    """A control computation was requested without a terminal state."""


class QuadratureNonConvergence(NumericalFailure):
    pass


class ModeOverflow(NumericalFailure):
    pass


class SingularMode(NumericalFailure):
    pass


class ControlBlowup(NumericalFailure):
    pass


class UnstableRun(NumericalFailure):
    pass
