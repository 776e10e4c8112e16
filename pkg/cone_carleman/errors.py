"""Exceptions raised by the cone_carleman library.

Contract outcomes (a ratio above 4, a negative eigenvalue) are never raised; they are
reported through the `passed` flag of the report dataclasses. The exceptions here mean
the tool itself could not do what was asked.
"""

from enum import Enum
from typing import Any, Optional


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class NumericalErrorReason(Enum):
    """Why a numerical routine gave up."""

    NON_FINITE = "NON_FINITE"
    """An integrand or solver produced NaN or infinity."""
    INSTABILITY = "INSTABILITY"
    """A solver exceeded the maximum-principle bound it must respect."""
    EMPTY_REGION = "EMPTY_REGION"
    """Rejection sampling exhausted its draw cap."""
    NO_SIGN_CHANGE = "NO_SIGN_CHANGE"
    """A root bracket does not change sign."""
    SUPPORT_LEAK = "SUPPORT_LEAK"
    """A test function support leaves its target domain."""
    NON_CONVERGENCE = "NON_CONVERGENCE"
    """An iterative method hit its iteration cap."""
    UNKNOWN = "UNKNOWN"
    """Catch-all for anything not listed above"""


class NumericalError(Exception):
    """A numerical routine failed."""

    def __init__(
        self,
        message: str,
        reason: NumericalErrorReason,
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        """Initialize a numerical error."""

        super().__init__(f"{message} ({reason.value})")
        self.message = message
        self.reason = reason
        self.details = details or {}


class ConfigError(Exception):
    """A run configuration could not be parsed or contains unknown keys."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        """Initialize the error.

        Args:
            message (str): What went wrong.
            line (int | None): 1-based line number in the config file, when known.
        """

        super().__init__(message if line is None else f"line {line}: {message}")
        self.message = message
        self.line = line
