"""Tokenizer for the sequence language."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import LexicalError, UnitError

#: unit -> (factor to canonical, time dimension); canonical units are us and MHz
UNITS = {
    "ns": (1e-3, 1),
    "us": (1.0, 1),
    "µs": (1.0, 1),
    "ms": (1e3, 1),
    "kHz": (1e-3, -1),
    "MHz": (1.0, -1),
    "GHz": (1e3, -1),
}

SYMBOLS = "{};=:()+-*/$"

_NUMBER = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
_WORD = re.compile(r"[A-Za-zµ_][A-Za-z0-9_µ]*")


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, IDENT, SYM, EOF
    text: str
    line: int
    col: int
    value: float | None = None
    unit: str | None = None


def tokenize(text: str, origin: str = "<input>") -> list[Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            num = m.group(0)
            j = m.end()
            unit = None
            w = _WORD.match(text, j)
            if w:
                unit = w.group(0)
                if unit not in UNITS:
                    raise UnitError(
                        f"unknown unit {unit!r} (expected one of {', '.join(UNITS)})",
                        line, col + (j - i), text, origin,
                    )
                j = w.end()
            tokens.append(Token("NUMBER", text[i:j], line, col, float(num), unit))
            col += j - i
            i = j
            continue
        w = _WORD.match(text, i)
        if w:
            tokens.append(Token("IDENT", w.group(0), line, col))
            col += w.end() - i
            i = w.end()
            continue
        if ch in SYMBOLS:
            tokens.append(Token("SYM", ch, line, col))
            i += 1
            col += 1
            continue
        raise LexicalError(f"unexpected character {ch!r}", line, col, text, origin)
    tokens.append(Token("EOF", "", line, col))
    return tokens
