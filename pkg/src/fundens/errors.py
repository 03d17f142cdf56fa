"""Exception classes shared across the package."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Span:
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class FunError(Exception):
    """Base class for user-facing errors."""

    def __init__(self, message, span: Optional[Span] = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self):
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class ParseError(FunError):
    pass


class FunTypeError(FunError):
    pass


class UnboundVariable(FunTypeError):
    def __init__(self, name, span=None):
        super().__init__(f"unbound variable '{name}'", span)
        self.name = name


class TypeMismatch(FunTypeError):
    def __init__(self, expected, actual, what="expression", span=None):
        super().__init__(f"type mismatch in {what}: expected {expected}, got {actual}", span)
        self.expected = expected
        self.actual = actual


class BadDistributionArity(FunTypeError):
    pass


class IntegralBodyNotReal(FunTypeError):
    pass


class ImpureSubstitutionRange(FunError):
    pass


class UnknownArraySize(FunError):
    pass


class DuplicateRecordField(FunError):
    pass


class ArityMismatch(FunError):
    pass


class NotFinitelyEnumerable(FunError):
    pass


class VarNotRandom(FunError):
    pass


class EmptyChain(FunError):
    pass


class NoValidStartPoint(FunError):
    pass


class NotVectorizable(Exception):
    """Raised internally when a plate body cannot be evaluated on index arrays."""


class NonConvergentIntegral(UserWarning):
    """Warning: an integral did not converge and was evaluated as 0.0."""
