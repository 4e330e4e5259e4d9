"""Error types shared by the parser, validator, and interpreter."""

from __future__ import annotations

from .ast import Span


class DslError(Exception):
    """Base class for all expression-language errors."""


class ParseError(DslError):
    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = expected
        detail = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"parse error at offset {position}: {message}{detail}")


class DslRuntimeError(DslError):
    """Guarded-interpreter failure; carries the offending span and state digest."""

    kind = "DslRuntimeError"

    def __init__(self, message: str, span: Span, state_digest: str):
        self.span = span
        self.state_digest = state_digest
        super().__init__(
            f"{self.kind} at span {span[0]}:{span[1]} on state {state_digest}: {message}"
        )


class DivisionNearZero(DslRuntimeError):
    kind = "DivisionNearZero"


class NonFiniteIntermediate(DslRuntimeError):
    kind = "NonFiniteIntermediate"


class DomainError(DslRuntimeError):
    kind = "DomainError"
