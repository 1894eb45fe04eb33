"""Exception hierarchy shared by all compiler stages.

Every error carries an optional source span so the CLI can print
``file:line:col`` diagnostics.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .syntax import SourceSpan


class CompileError(Exception):
    """Base class for all errors raised by this package."""

    def __init__(self, message: str, span: "SourceSpan | None" = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class ParseError(CompileError):
    """Malformed source text."""


class ValidationError(CompileError):
    """Structurally valid parse that violates a language rule."""


class TypeCheckError(CompileError):
    """Expression does not type-check."""


class ParamError(CompileError):
    """Problem binding parameters to a model."""


class MissingParamError(ParamError):
    pass


class UnknownParamError(ParamError):
    pass


class DomainViolationError(ParamError):
    pass


class EvalError(CompileError):
    """Runtime failure while evaluating a ground expression."""


class DivByZeroError(EvalError):
    pass


class OverflowLimitError(EvalError):
    """Result left the checked 64-bit integer envelope."""


class UnboundNameError(EvalError):
    pass


class IndexRangeError(EvalError):
    """Matrix index outside the declared index range."""


class ExpansionTimeout(CompileError):
    """A user-supplied deadline expired during search or expansion."""


class InternalError(CompileError):
    """Invariant violation; indicates a bug, not bad user input."""
