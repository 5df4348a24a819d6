"""Exception types shared by the solver modules.

The CLI maps :class:`NumericError` subclasses to exit status 3 and
:class:`DomainError` raised during config validation to status 2.
"""

from __future__ import annotations


class HeatFluxError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HeatFluxError, ValueError):
    """An argument lies outside the domain of the operation."""


class BoundViolation(DomainError):
    """A checked precondition on solver history does not hold."""

    def __init__(self, message: str, node: tuple[int, ...] | None = None) -> None:
        super().__init__(message)
        self.node = node


class NumericError(HeatFluxError, ArithmeticError):
    """A numerical procedure could not deliver the requested accuracy."""


class AccuracyError(NumericError):
    """Quadrature error estimate exceeds the requested tolerance."""

    def __init__(self, message: str, estimate: float) -> None:
        super().__init__(f"{message} (estimated error {estimate:.3e})")
        self.estimate = estimate


class StiffnessError(NumericError):
    """Picard iteration on the current panel failed to contract."""

    def __init__(self, message: str, ratio: float, step: int) -> None:
        super().__init__(f"{message} at step {step} (contraction ratio {ratio:.3g}); "
                         "use a smaller time step")
        self.ratio = ratio
        self.step = step


class TruncationError(NumericError):
    """Series summation ran out of terms before meeting the tail criterion."""

    def __init__(self, message: str, achieved_tail: float) -> None:
        super().__init__(f"{message} (achieved tail {achieved_tail:.3e})")
        self.achieved_tail = achieved_tail
