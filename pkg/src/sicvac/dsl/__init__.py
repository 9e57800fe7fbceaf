"""Text format for pulse programs and their sweeps."""
from .ast import SequenceAst
from .compile import Family, compile_ast, evaluate, sweep_values
from .errors import (
    ERROR_KINDS,
    DslError,
    DslSyntaxError,
    DuplicateReadoutError,
    GridError,
    LexicalError,
    MissingReadoutError,
    NonpositiveDurationError,
    UnitError,
    UnknownKeywordError,
    UnresolvedSymbolError,
)
from .parser import parse
from .serialize import serialize
from .templates import shipped_template, template_names, template_source


def parse_file(path) -> SequenceAst:
    from pathlib import Path

    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), origin=str(path))


def compile(ast: SequenceAst, seed: int | None = None, n_members: int | None = None) -> Family:  # noqa: A001
    """Alias of :func:`compile_ast`."""
    return compile_ast(ast, seed=seed, n_members=n_members)


__all__ = [
    "DslError", "DslSyntaxError", "DuplicateReadoutError", "ERROR_KINDS", "Family", "GridError",
    "LexicalError", "MissingReadoutError", "NonpositiveDurationError", "SequenceAst", "UnitError",
    "UnknownKeywordError", "UnresolvedSymbolError", "compile", "compile_ast", "evaluate", "parse",
    "parse_file", "serialize", "shipped_template", "sweep_values", "template_names", "template_source",
]
