"""Exception hierarchy shared by every module."""

from __future__ import annotations

from typing import Any, Optional


class TransfixError(Exception):
    """Base class for all errors raised by this package."""


class OrdinalParseError(TransfixError, ValueError):
    def __init__(self, message: str, column: Optional[int] = None):
        super().__init__(message)
        self.column = column


class NotALimit(TransfixError, ValueError):
    pass


class SpaceMismatch(TransfixError, ValueError):
    pass


class BadFactor(TransfixError, ValueError):
    pass


class TooLarge(TransfixError, ValueError):
    pass


class LatticeError(TransfixError, ValueError):
    """A declared order is not a lattice (or not even a partial order)."""


class OperatorCheckFailed(TransfixError):
    """An operator failed the check for the kind it declares."""

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


class BudgetExceeded(TransfixError, ValueError):
    pass


class StageNotRecorded(TransfixError, LookupError):
    pass


class NonConvergence(TransfixError):
    """The iteration did not settle within its ordinal budget.

    Carries the partial :class:`~transfix.engine.IterationTrace` so callers can
    inspect what happened.
    """

    def __init__(self, message: str, trace: Any = None):
        super().__init__(message)
        self.trace = trace


class LimitDivergence(NonConvergence):
    """Fundamental-sequence samples never agreed at a limit stage."""


class NoFixpoint(TransfixError):
    pass


class SignalUndefined(TransfixError, LookupError):
    pass


class InnerDivergence(TransfixError):
    """The inner game failed to reach an equilibrium for the given context."""

    def __init__(self, message: str, context: Any = None, cause: Optional[BaseException] = None):
        super().__init__(message)
        self.context = context
        self.cause = cause


class UnknownLabel(TransfixError, KeyError):
    pass


class EmptyTrace(TransfixError, ValueError):
    pass


class ScenarioParseError(TransfixError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


class ScenarioValidationError(TransfixError, ValueError):
    pass
