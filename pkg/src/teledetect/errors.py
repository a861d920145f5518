"""Exception types shared across the package."""


class UsageError(ValueError):
    """Bad arguments: wrong sizes, out-of-range parameters, layout mismatches."""


class ContractError(ValueError):
    """An operand violates a structural precondition (non-Hermitian, non-unitary)."""


class StateParseError(UsageError):
    """A state or unitary file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StateValidationError(UsageError):
    """A parsed state failed one of its invariants."""
