"""Canonical text form of a sequence tree."""
from __future__ import annotations

from .ast import Assign, Axis, BinOp, Let, Neg, Number, Options, Repeat, SequenceAst, Setting, Var

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_INDENT = "  "


def fmt_number(v: float) -> str:
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    return 4


def expr_text(e) -> str:
    if isinstance(e, Number):
        return fmt_number(e.value) + (e.unit or "")
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Axis):
        return e.name
    if isinstance(e, Neg):
        inner = expr_text(e.operand)
        if isinstance(e.operand, (BinOp, Neg, Axis)):
            inner = f"({inner})"
        return "-" + inner
    p = _PREC[e.op]
    left = expr_text(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = expr_text(e.right)
    # the parser is left-associative, so an equal-precedence right child needs parentheses
    if _prec(e.right) <= p:
        right = f"({right})"
    sep = f" {e.op} " if e.op in "+-" else e.op
    return f"{left}{sep}{right}"


def _args(args) -> str:
    return "".join(f" {a.key}={expr_text(a.value)}" for a in args)


def _items(items, depth: int) -> list[str]:
    pad = _INDENT * depth
    out = []
    for it in items:
        if isinstance(it, Repeat):
            out.append(f"{pad}repeat {expr_text(it.count)} {{")
            out.extend(_items(it.body, depth + 1))
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}{it.kind}{_args(it.args)};")
    return out


def _header(stmt) -> str:
    if isinstance(stmt, Setting):
        return f"{stmt.keyword} {stmt.name};"
    if isinstance(stmt, Let):
        return f"let {stmt.name} = {expr_text(stmt.value)};"
    if isinstance(stmt, Assign):
        return f"{stmt.keyword} = {expr_text(stmt.value)};"
    if isinstance(stmt, Options):
        return f"{stmt.keyword}{_args(stmt.args)};"
    raise TypeError(f"not a header statement: {stmt!r}")


def serialize(ast: SequenceAst) -> str:
    lines = [_header(s) for s in ast.header]
    if lines:
        lines.append("")
    lines.append("sequence {")
    lines.extend(_items(ast.sequence, 1))
    lines.append("}")
    if ast.reference is not None:
        lines.append("reference {")
        lines.extend(_items(ast.reference, 1))
        lines.append("}")
    sw = ast.sweep
    lines.append(
        f"sweep {sw.var} = {fmt_number(sw.start)}:{fmt_number(sw.step)}:{fmt_number(sw.stop)}"
        f"{sw.unit or ''};"
    )
    return "\n".join(lines) + "\n"


__all__ = ["serialize", "expr_text", "fmt_number"]
