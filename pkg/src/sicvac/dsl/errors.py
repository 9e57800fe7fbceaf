"""Diagnostics for the sequence language.

Every error carries a 1-based line and column and renders a caret excerpt
of the offending source line.
"""
from __future__ import annotations


class DslError(Exception):
    kind = "error"

    def __init__(self, message: str, line: int = 0, col: int = 0, source: str | None = None,
                 origin: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        self.origin = origin

    def excerpt(self) -> str:
        if not self.source or self.line < 1:
            return ""
        # end of input may sit on the empty line after a final newline
        lines = self.source.splitlines() + [""]
        if self.line > len(lines):
            return ""
        text = lines[self.line - 1]
        return f"{text}\n{' ' * (self.col - 1)}^"

    def __str__(self) -> str:
        head = f"{self.origin}:{self.line}:{self.col}: {self.kind}: {self.message}"
        ex = self.excerpt()
        return f"{head}\n{ex}" if ex else head


class LexicalError(DslError):
    kind = "lexical"


class DslSyntaxError(DslError):
    kind = "syntax"


class UnknownKeywordError(DslError):
    kind = "unknown-keyword"


class UnresolvedSymbolError(DslError):
    kind = "unresolved-symbol"


class DuplicateReadoutError(DslError):
    kind = "duplicate-readout"


class MissingReadoutError(DslError):
    kind = "missing-readout"


class NonpositiveDurationError(DslError):
    kind = "nonpositive-duration"


class UnitError(DslError):
    kind = "unit"


class GridError(DslError):
    """Evaluation failed at one sweep point; ``index`` names the grid index."""

    kind = "grid"

    def __init__(self, message: str, index: int, line: int = 0, col: int = 0,
                 source: str | None = None, origin: str = "<input>"):
        super().__init__(f"grid index {index}: {message}", line, col, source, origin)
        self.index = index


ERROR_KINDS = {
    cls.kind: cls
    for cls in (
        LexicalError, DslSyntaxError, UnknownKeywordError, UnresolvedSymbolError,
        DuplicateReadoutError, MissingReadoutError, NonpositiveDurationError, UnitError, GridError,
    )
}
