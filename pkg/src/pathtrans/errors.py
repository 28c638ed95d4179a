"""Exception hierarchy shared by all modules.

Three failure families map onto the CLI exit codes and the HTTP statuses
of the service layer:

* ``ValidationError``  -- bad configuration or violated precondition (exit 2)
* ``GateFailure``      -- an existence gate rejected the request (exit 3)
* ``SingularityError`` -- a numerical singularity was hit (exit 4)
"""

from __future__ import annotations


class PathtransError(Exception):
    """Base class for all errors raised by this package."""

    kind = "error"

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.message = message
        self.location = location

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "message": self.message,
            "location": self.location if self.location is not None else "",
        }


class ValidationError(PathtransError):
    """Invalid configuration, expression, or violated call precondition."""

    kind = "config"


class ExpressionSyntaxError(ValidationError):
    """Parse failure; ``position`` is the offending 1-based character index."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})", location=f"position {position}")
        self.position = position


class GateFailure(PathtransError):
    """An existence gate failed (e.g. a region is not flat)."""

    kind = "gate"

    def __init__(self, message: str, location: str | None = None, max_violation: float | None = None):
        super().__init__(message, location)
        self.max_violation = max_violation


class SingularityError(PathtransError):
    """A field, matrix, or expression became singular during evaluation."""

    kind = "singularity"
