"""Exception hierarchy shared by every module."""
from __future__ import annotations


class ReformulationError(Exception):
    """Base class for all library errors."""


class InputError(ReformulationError):
    """Malformed or inconsistent user input (CLI exit code 1)."""


class PipelineError(ReformulationError):
    """A pipeline could not finish on otherwise valid input (CLI exit code 2)."""


class QueryError(InputError):
    pass


class UnsafeQuery(QueryError):
    pass


class UnknownPredicate(QueryError):
    pass


class ArityMismatch(QueryError):
    pass


class HeadArityMismatch(QueryError):
    pass


class DependencyError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


class DataError(InputError):
    """Bad CSV data: variables as values, wrong arity."""

    def __init__(self, message: str, path: str = "", line: int = 0):
        where = f"{path}:{line}: " if path else ""
        super().__init__(where + message)
        self.path = path
        self.line = line


class InstanceViolatesDeps(InputError):
    pass


class DuplicateViewName(InputError):
    pass


class UnknownView(ReformulationError):
    pass


class MissingRelation(ReformulationError):
    pass


class StepLimitExceeded(PipelineError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class UnsupportedDependencySet(PipelineError):
    pass


class UnsatisfiableQuery(PipelineError):
    pass


class GenerationFailed(ReformulationError):
    pass
