"""Error catalogue.

Every error raised by the library is a `MetriqError` subclass, so callers can
catch a specific one (ParseError) or the base class as a catch-all. Kernel
verdicts, countermodel outcomes and undefined evaluations are values, not
errors.
"""


class MetriqError(Exception):
    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


class MetricError(MetriqError):
    """Invalid metric data or an unknown point identifier."""


class ArityError(MetriqError):
    """Arguments do not have the shape the symbol's arity requires."""


class SignatureError(MetriqError):
    """Unknown, duplicate or clashing operation symbol."""


class ParseError(MetriqError):
    def __init__(self, line: int, column: int, expectation: str) -> None:
        super().__init__(f"line {line}, column {column}: expected {expectation}")
        self.line = line
        self.column = column
        self.expectation = expectation


class NotWellFormedError(MetriqError):
    """A term could not be proved well-formed within the configured depth."""


class UnknownTheoryError(MetriqError):
    pass


class ProofFormatError(MetriqError):
    """A serialized proof, model or space document is malformed."""


class EmptyUniverseError(MetriqError):
    """The term universe is empty, so there is nothing to measure."""


class ConfigError(MetriqError):
    """A resource bound from the environment or the command line is invalid."""
