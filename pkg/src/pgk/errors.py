"""Exception hierarchy shared by every pgk module."""


class PGKError(Exception):
    """Base class for all pgk failures."""


class ResourceLimitError(PGKError):
    """A computation would exceed a configured hard limit."""


class RangeTooLargeError(PGKError, ValueError):
    """A sieve request spans more integers than one segment allows."""


class DSLError(PGKError, ValueError):
    pass


class DSLSyntaxError(DSLError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at offset {position}")


class UnknownIdentifierError(DSLSyntaxError):
    pass


class EvaluationError(PGKError, ArithmeticError):
    pass


class DomainError(EvaluationError):
    """log/sqrt of a nonpositive enclosure, division by an enclosure holding 0."""


class NonPositiveValueError(EvaluationError):
    """A sequence that must be positive evaluated to a value <= 0."""

    def __init__(self, message: str, n: int | None = None, which: str | None = None):
        self.n = n
        self.which = which
        super().__init__(message)


class IndeterminateSignError(EvaluationError):
    """Enclosure straddles zero; retry at a higher precision."""

    def __init__(self, message: str, interval=None):
        self.interval = interval
        super().__init__(message)


class InapplicableError(PGKError, ValueError):
    """The exact rational path cannot represent the requested quantity."""


class HypothesisError(PGKError, ValueError):
    """An exponent violates the hypothesis of the statement being explored."""
