"""Shared exception types."""

from __future__ import annotations


class ChaosCalcError(Exception):
    """Base class for all package-specific errors."""


class PreconditionError(ChaosCalcError, ValueError):
    """An operation was called with inputs violating its documented preconditions."""


class ParseError(ChaosCalcError, ValueError):
    """A serialized input (polynomial, law, sample file) is malformed."""


class MissingVariableError(PreconditionError):
    """An evaluation point does not assign every variable of the polynomial."""

    def __init__(self, missing):
        self.missing = tuple(sorted(missing))
        super().__init__(f"evaluation point is missing variables: {list(self.missing)}")


class BasisSizeError(ChaosCalcError):
    """A requested basis would exceed the configured dimension cap."""

    def __init__(self, dimension: int, cap: int):
        self.dimension = dimension
        self.cap = cap
        super().__init__(f"basis dimension {dimension} exceeds cap {cap}")
