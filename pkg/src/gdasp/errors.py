from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional

from .terms import SourceSpan


class GdaspError(Exception):
    """Base class for errors raised by the package."""


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    message: str
    expected: FrozenSet[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.message:
            raise ValueError("parse error message must not be empty")

    def __str__(self):
        text = f"{self.span}: {self.message}"
        if self.expected:
            text += f" (expected {', '.join(sorted(self.expected))})"
        return text


class ProgramSyntaxError(GdaspError):
    def __init__(self, errors: List[ParseError]):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))


class ProgramError(GdaspError):
    """Well-formed syntax with invalid meaning, e.g. an abducible that also has rules."""

    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


class EngineError(GdaspError):
    pass


class NonlinearConstraintError(EngineError):
    pass


class ForallUnsupportedError(EngineError):
    pass


class NotRecordedError(GdaspError):
    pass


class UngroundableError(GdaspError):
    pass


class TooLargeError(GdaspError):
    pass
