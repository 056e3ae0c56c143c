"""Exception hierarchy.

Validation problems derive from ``ValueError`` so callers that only care
about bad input can catch the builtin. Numeric degeneracies get their own
branch because the CLI maps them to a distinct exit code.
"""


class TrendHedgeError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidParameter(TrendHedgeError):
    pass


class SeriesTooShort(TrendHedgeError):
    pass


class InvalidPrice(TrendHedgeError):
    """A price that is missing, non-numeric or non-finite."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class NonPositivePrice(InvalidPrice):
    pass


class NumericDegeneracy(TrendHedgeError):
    """Inputs that are valid individually but make a formula singular."""


class DegenerateInputs(NumericDegeneracy):
    pass


class DegenerateInitialization(NumericDegeneracy):
    pass
