"""Error types shared across the engine.

Each class carries the process exit code the CLI maps it to: 1 usage,
2 parse, 3 safety/stratification/mode rejection, 4 resource bound.
"""

from __future__ import annotations


class TrilogicError(Exception):
    exit_code = 1


class UsageError(TrilogicError):
    exit_code = 1


class LpParseError(TrilogicError):
    exit_code = 2

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.reason = message
        self.line = line
        self.column = column


class SafetyError(TrilogicError):
    exit_code = 3


class ReservedNameError(TrilogicError):
    exit_code = 3


class PathArityError(TrilogicError):
    exit_code = 3


class StratificationError(TrilogicError):
    exit_code = 3


class UnknownPredicateError(TrilogicError):
    exit_code = 3


class UnsupportedInModeError(TrilogicError):
    exit_code = 3


class AggregateTypeError(TrilogicError):
    exit_code = 3


class ResourceBoundError(TrilogicError):
    exit_code = 4
