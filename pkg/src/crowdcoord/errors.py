"""Exception types shared across the package."""


class BudgetExceededError(RuntimeError):
    """Raised when an exact computation would exceed the configured compute budget."""


class IneligibleProjectError(ValueError):
    """Raised when a project does not qualify for a measurement (caller filters)."""


class DataError(Exception):
    """A problem with input data files (as opposed to flag usage)."""


class MalformedEventError(DataError):
    """An event line that cannot be parsed; message carries the line number."""
