"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: input errors exit 2, refusals exit 3,
invariant violations exit 4.
"""


class MuLimitError(Exception):
    """Base class for all package errors."""


class InputError(MuLimitError, ValueError):
    """Malformed or inconsistent user input."""


class AlphabetError(InputError):
    """A symbol or configuration does not belong to the automaton's alphabet."""


class EmptyConfigurationError(InputError):
    """A configuration or word of length zero where one is not allowed."""


class RuleParseError(InputError):
    """A rule, measure or machine document could not be parsed.

    ``location`` is a human readable pointer into the document, for example
    ``"rule[12]"`` or ``"line 4, column 7"``.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class PreconditionError(InputError):
    """An operation was called outside its documented precondition."""


class CostCapExceeded(MuLimitError):
    """Exact computation refused because it would exceed the configured cap."""

    def __init__(self, cap, spent, what="context transitions"):
        self.cap = cap
        self.spent = spent
        super().__init__(f"cost cap of {cap} {what} exceeded (reached {spent})")


class Refusal(MuLimitError):
    """An analysis declined to run (e.g. the machine does not halt in the pre-horizon)."""


class InvariantViolation(MuLimitError, AssertionError):
    """An internal consistency check failed."""
