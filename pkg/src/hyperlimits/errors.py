"""Exception types shared across the package."""


class HyperlimitsError(Exception):
    """Base class for all package errors."""


class ValidationError(HyperlimitsError, ValueError):
    """Input data violates a structural precondition."""


class BudgetExceeded(HyperlimitsError):
    """A computation would exceed its configured enumeration budget."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class HardAssertionFailure(HyperlimitsError):
    """A checked inequality or guarantee did not hold."""
