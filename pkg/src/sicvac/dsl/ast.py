"""Syntax tree of a sequence file.

Source positions are kept for diagnostics but excluded from equality, so
two trees compare equal when they describe the same program.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True)
class Pos:
    line: int = 0
    col: int = 0


def _pos():
    return field(default_factory=Pos, compare=False, repr=False)


# expressions

@dataclass(frozen=True)
class Number:
    value: float
    unit: str | None = None
    pos: Pos = _pos()

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError("number literals are nonnegative; use unary minus")


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Axis:
    """Phase axis token: x, y, -x or -y."""

    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()


Expr = Union[Number, Var, Axis, Neg, BinOp]


# statements

@dataclass(frozen=True)
class Arg:
    key: str
    value: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Event:
    kind: str  # laser, rf, wait, readout
    args: tuple[Arg, ...] = ()
    pos: Pos = _pos()

    def arg(self, key: str) -> Arg | None:
        for a in self.args:
            if a.key == key:
                return a
        return None


@dataclass(frozen=True)
class Repeat:
    count: Expr
    body: tuple = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class Let:
    name: str
    value: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Setting:
    """``center``, ``pump`` and ``fit`` take a single name."""

    keyword: str
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Options:
    """``relax`` and ``ensemble`` take key=value pairs."""

    keyword: str
    args: tuple[Arg, ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign:
    """``axis = expr;`` and ``norm = expr;``."""

    keyword: str
    value: Expr
    pos: Pos = _pos()


Header = Union[Let, Setting, Options, Assign]


@dataclass(frozen=True)
class Sweep:
    var: str
    start: float
    step: float
    stop: float
    unit: str | None = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class SequenceAst:
    header: tuple = ()
    sequence: tuple = ()
    reference: tuple | None = None
    sweep: Sweep | None = None
    origin: str = field(default="<input>", compare=False, repr=False)
    source: str | None = field(default=None, compare=False, repr=False)
