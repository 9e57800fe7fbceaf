"""Recursive-descent parser and static checks for sequence files.

Grammar (``#`` starts a comment)::

    file     = header* "sequence" block ["reference" block] sweep EOF
    header   = "center" NAME ";" | "pump" NAME ";" | "fit" NAME ";"
             | "let" NAME "=" expr ";" | ("axis" | "norm") "=" expr ";"
             | ("relax" | "ensemble") kv* ";"
    block    = "{" item* "}"
    item     = ("laser" | "rf" | "wait" | "readout") kv* ";"
             | "repeat" expr block
    kv       = NAME "=" expr
    sweep    = "sweep" NAME "=" signed ":" signed ":" signed [UNIT] ";"
    expr     = term (("+" | "-") term)*
    term     = unary (("*" | "/") unary)*
    unary    = "-" unary | primary
    primary  = NUMBER [UNIT] | ["$"] NAME | "(" expr ")"

The sweep range is start:step:stop.  ``x``, ``y``, ``-x`` and ``-y`` are
phase axes (0, pi/2, pi, 3pi/2); ``pi`` is a constant.
"""
from __future__ import annotations

from .ast import (
    Arg, Assign, Axis, BinOp, Event, Let, Neg, Number, Options, Pos, Repeat,
    SequenceAst, Setting, Sweep, Var,
)
from .errors import (
    DslSyntaxError,
    DuplicateReadoutError,
    MissingReadoutError,
    NonpositiveDurationError,
    UnitError,
    UnknownKeywordError,
    UnresolvedSymbolError,
)
from .lexer import UNITS, Token, tokenize

EVENT_KEYS = {
    "laser": {"dur"},
    "wait": {"dur"},
    "readout": {"dur"},
    "rf": {"dur", "phase", "rabi", "detuning", "hard"},
}
REQUIRED_KEYS = {"laser": {"dur"}, "wait": {"dur"}, "readout": {"dur"}, "rf": {"dur", "rabi"}}
OPTION_KEYS = {
    "relax": {"t1", "t2", "t2_star", "sigma", "tau_c", "w_eq"},
    "ensemble": {"n", "dist", "width", "seed", "rabi_spread"},
}
SETTING_NAMES = {
    "center": {"v1v3", "v2"},
    "pump": {"v1v3", "v2", "none"},
    "fit": {"rabi", "fid", "exp_decay", "stretched_exp", "saturation", "sqrt_linewidth"},
}
WORD_VALUES = {"dist": {"delta", "lorentzian", "gaussian"}, "hard": {"true", "false"}}
# time dimension expected for each key: 1 time, -1 frequency, 0 plain number
KEY_DIMS = {
    "dur": 1, "phase": 0, "rabi": -1, "detuning": -1,
    "t1": 1, "t2": 1, "t2_star": 1, "sigma": -1, "tau_c": 1, "w_eq": 0,
    "n": 0, "width": -1, "seed": 0, "rabi_spread": 0,
}
HEADER_KEYWORDS = {"center", "pump", "fit", "let", "axis", "norm", "relax", "ensemble"}
RESERVED = {"x", "y", "pi"}
CONSTANTS = {"pi"}


class Parser:
    def __init__(self, text: str, origin: str = "<input>"):
        self.text = text
        self.origin = origin
        self.tokens = tokenize(text, origin)
        self.i = 0

    # token helpers

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, cls, message, tok_or_pos):
        return cls(message, tok_or_pos.line, tok_or_pos.col, self.text, self.origin)

    def expect_sym(self, sym: str) -> Token:
        tok = self.next()
        if tok.kind != "SYM" or tok.text != sym:
            raise self.error(DslSyntaxError, f"expected {sym!r}, found {_describe(tok)}", tok)
        return tok

    def expect_name(self, what: str = "a name") -> Token:
        tok = self.next()
        if tok.kind != "IDENT":
            raise self.error(DslSyntaxError, f"expected {what}, found {_describe(tok)}", tok)
        return tok

    def at_sym(self, sym: str) -> bool:
        tok = self.peek()
        return tok.kind == "SYM" and tok.text == sym

    # grammar

    def parse_file(self) -> SequenceAst:
        header = []
        while True:
            tok = self.peek()
            if tok.kind == "IDENT" and tok.text == "sequence":
                break
            if tok.kind == "EOF":
                raise self.error(DslSyntaxError, "missing 'sequence' block", tok)
            header.append(self.parse_header())
        self.next()
        sequence = self.parse_block("sequence")
        reference = None
        tok = self.peek()
        if tok.kind == "IDENT" and tok.text == "reference":
            self.next()
            reference = self.parse_block("reference")
        sweep = self.parse_sweep()
        tok = self.peek()
        if tok.kind != "EOF":
            if tok.kind == "IDENT" and tok.text == "sweep":
                raise self.error(DslSyntaxError, "only one sweep variable is allowed", tok)
            raise self.error(DslSyntaxError, f"unexpected {_describe(tok)} after sweep", tok)
        return SequenceAst(tuple(header), sequence, reference, sweep, self.origin, self.text)

    def parse_header(self):
        tok = self.next()
        pos = Pos(tok.line, tok.col)
        if tok.kind != "IDENT":
            raise self.error(DslSyntaxError, f"expected a statement, found {_describe(tok)}", tok)
        kw = tok.text
        if kw in SETTING_NAMES:
            name = self.expect_name(f"a {kw} name")
            if name.text not in SETTING_NAMES[kw]:
                choices = ", ".join(sorted(SETTING_NAMES[kw]))
                raise self.error(UnknownKeywordError, f"unknown {kw} {name.text!r} (expected {choices})", name)
            self.expect_sym(";")
            return Setting(kw, name.text, pos)
        if kw == "let":
            name = self.expect_name("a variable name")
            if name.text in RESERVED or name.text in HEADER_KEYWORDS:
                raise self.error(DslSyntaxError, f"{name.text!r} is reserved", name)
            self.expect_sym("=")
            value = self.parse_expr()
            self.expect_sym(";")
            return Let(name.text, value, pos)
        if kw in ("axis", "norm"):
            self.expect_sym("=")
            value = self.parse_expr()
            self.expect_sym(";")
            return Assign(kw, value, pos)
        if kw in OPTION_KEYS:
            args = self.parse_kvs(OPTION_KEYS[kw], kw)
            self.expect_sym(";")
            return Options(kw, args, pos)
        if kw in ("reference", "sweep"):
            raise self.error(DslSyntaxError, f"{kw!r} must follow the sequence block", tok)
        raise self.error(UnknownKeywordError, f"unknown statement {kw!r}", tok)

    def parse_kvs(self, allowed: set, owner: str) -> tuple:
        args = []
        seen = set()
        # a name only starts a pair when "=" follows, so a missing ";" before
        # the next statement is reported as such
        while self.peek().kind == "IDENT" and self.peek(1).kind == "SYM" and self.peek(1).text == "=":
            key = self.next()
            if key.text not in allowed:
                raise self.error(
                    UnknownKeywordError,
                    f"unknown key {key.text!r} for {owner} (expected {', '.join(sorted(allowed))})",
                    key,
                )
            if key.text in seen:
                raise self.error(DslSyntaxError, f"duplicate key {key.text!r}", key)
            seen.add(key.text)
            self.expect_sym("=")
            args.append(Arg(key.text, self.parse_expr(), Pos(key.line, key.col)))
        return tuple(args)

    def parse_block(self, name: str, in_repeat: bool = False) -> tuple:
        self.expect_sym("{")
        items = []
        while not self.at_sym("}"):
            tok = self.next()
            if tok.kind == "EOF":
                raise self.error(DslSyntaxError, f"unterminated {name} block", tok)
            if tok.kind != "IDENT":
                raise self.error(DslSyntaxError, f"expected an event, found {_describe(tok)}", tok)
            pos = Pos(tok.line, tok.col)
            if tok.text == "repeat":
                count = self.parse_expr()
                items.append(Repeat(count, self.parse_block("repeat", True), pos))
                continue
            if tok.text not in EVENT_KEYS:
                raise self.error(UnknownKeywordError, f"unknown event {tok.text!r}", tok)
            if tok.text == "readout" and in_repeat:
                raise self.error(DuplicateReadoutError, "readout inside repeat would run more than once", tok)
            args = self.parse_kvs(EVENT_KEYS[tok.text], tok.text)
            self.expect_sym(";")
            missing = REQUIRED_KEYS[tok.text] - {a.key for a in args}
            if missing:
                raise self.error(DslSyntaxError, f"{tok.text} needs {', '.join(sorted(missing))}", tok)
            items.append(Event(tok.text, args, pos))
        close = self.next()
        if not in_repeat:
            self.check_structure(name, items, close)
        return tuple(items)

    def check_structure(self, name: str, items: list, close: Token) -> None:
        readouts = [ev for ev in items if isinstance(ev, Event) and ev.kind == "readout"]
        if len(readouts) > 1:
            raise self.error(DuplicateReadoutError, f"{name} block has more than one readout", readouts[1].pos)
        if not readouts:
            raise self.error(MissingReadoutError, f"{name} block has no readout", close)
        if items[-1] is not readouts[0]:
            raise self.error(DslSyntaxError, "readout must be the last event", readouts[0].pos)
        first = items[0]
        if not (isinstance(first, Event) and first.kind == "laser"):
            raise self.error(DslSyntaxError, f"{name} block must start with a laser pulse", first.pos)

    def parse_sweep(self) -> Sweep:
        tok = self.next()
        if tok.kind != "IDENT" or tok.text != "sweep":
            raise self.error(DslSyntaxError, f"expected 'sweep', found {_describe(tok)}", tok)
        name = self.expect_name("the sweep variable")
        if name.text in RESERVED:
            raise self.error(DslSyntaxError, f"{name.text!r} is reserved", name)
        self.expect_sym("=")
        start, u1 = self.parse_signed()
        self.expect_sym(":")
        step, u2 = self.parse_signed()
        self.expect_sym(":")
        stop, utok = self.parse_signed()
        unit = utok.unit if utok else None
        if u1 or u2:
            bad = u1 or u2
            raise self.error(UnitError, "the unit goes after the stop value only", bad)
        if step == 0:
            raise self.error(DslSyntaxError, "sweep step must be nonzero", name)
        self.expect_sym(";")
        return Sweep(name.text, start, step, stop, unit, Pos(tok.line, tok.col))

    def parse_signed(self):
        sign = 1.0
        if self.at_sym("-"):
            self.next()
            sign = -1.0
        tok = self.next()
        if tok.kind != "NUMBER":
            raise self.error(DslSyntaxError, f"expected a number, found {_describe(tok)}", tok)
        return sign * tok.value, tok if tok.unit else None

    def parse_expr(self):
        left = self.parse_term()
        while self.at_sym("+") or self.at_sym("-"):
            op = self.next()
            left = BinOp(op.text, left, self.parse_term(), Pos(op.line, op.col))
        return left

    def parse_term(self):
        left = self.parse_unary()
        while self.at_sym("*") or self.at_sym("/"):
            op = self.next()
            left = BinOp(op.text, left, self.parse_unary(), Pos(op.line, op.col))
        return left

    def parse_unary(self):
        if self.at_sym("-"):
            op = self.next()
            nxt = self.peek()
            if nxt.kind == "IDENT" and nxt.text in ("x", "y"):
                self.next()
                return Axis("-" + nxt.text, Pos(op.line, op.col))
            return Neg(self.parse_unary(), Pos(op.line, op.col))
        return self.parse_primary()

    def parse_primary(self):
        tok = self.next()
        pos = Pos(tok.line, tok.col)
        if tok.kind == "NUMBER":
            return Number(tok.value, tok.unit, pos)
        if tok.kind == "SYM" and tok.text == "$":
            name = self.expect_name("a variable name after '$'")
            return Var(name.text, pos)
        if tok.kind == "IDENT":
            if tok.text in ("x", "y"):
                return Axis(tok.text, pos)
            return Var(tok.text, pos)
        if tok.kind == "SYM" and tok.text == "(":
            inner = self.parse_expr()
            self.expect_sym(")")
            return inner
        raise self.error(DslSyntaxError, f"expected an expression, found {_describe(tok)}", tok)


def _describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    return repr(tok.text)


# static checks


def start_pos(expr) -> Pos:
    """Position of the leftmost token of an expression."""
    while isinstance(expr, BinOp):
        expr = expr.left
    return expr.pos


def infer_dim(expr, dims: dict, checker) -> int:
    """Time dimension of an expression; ``checker`` builds errors."""
    if isinstance(expr, Number):
        return UNITS[expr.unit][1] if expr.unit else 0
    if isinstance(expr, Axis):
        return 0
    if isinstance(expr, Var):
        if expr.name in CONSTANTS:
            return 0
        if expr.name not in dims:
            raise checker(UnresolvedSymbolError, f"undefined symbol {expr.name!r}", expr.pos)
        return dims[expr.name]
    if isinstance(expr, Neg):
        return infer_dim(expr.operand, dims, checker)
    a = infer_dim(expr.left, dims, checker)
    b = infer_dim(expr.right, dims, checker)
    if expr.op in "+-":
        if a != b:
            raise checker(
                UnitError, f"cannot combine {_dim_name(a)} and {_dim_name(b)} with {expr.op!r}", expr.pos
            )
        return a
    return a + b if expr.op == "*" else a - b


def _dim_name(d: int) -> str:
    return {1: "a time", -1: "a frequency", 0: "a plain number"}.get(d, f"time^{d}")


def constant_value(expr, consts: dict):
    """Value in canonical units if ``expr`` depends only on constants, else None."""
    import math

    if isinstance(expr, Number):
        return expr.value * (UNITS[expr.unit][0] if expr.unit else 1.0)
    if isinstance(expr, Axis):
        return {"x": 0.0, "y": math.pi / 2, "-x": math.pi, "-y": 3 * math.pi / 2}[expr.name]
    if isinstance(expr, Var):
        if expr.name == "pi":
            return math.pi
        return consts.get(expr.name)
    if isinstance(expr, Neg):
        v = constant_value(expr.operand, consts)
        return None if v is None else -v
    a = constant_value(expr.left, consts)
    b = constant_value(expr.right, consts)
    if a is None or b is None:
        return None
    try:
        return {"+": a + b, "-": a - b, "*": a * b}[expr.op] if expr.op != "/" else a / b
    except ZeroDivisionError:
        return None


def check(ast: SequenceAst) -> SequenceAst:
    """Resolve symbols, check units and constant durations."""
    src, origin = ast.source, ast.origin

    def err(cls, message, pos):
        return cls(message, pos.line, pos.col, src, origin)

    sweep = ast.sweep
    dims = {sweep.var: UNITS[sweep.unit][1] if sweep.unit else 0}
    consts: dict = {}
    for stmt in ast.header:
        if isinstance(stmt, Let):
            if stmt.name == sweep.var:
                raise err(DslSyntaxError, f"{stmt.name!r} is already the sweep variable", stmt.pos)
            dims[stmt.name] = infer_dim(stmt.value, dims, err)
            value = constant_value(stmt.value, consts)
            if value is not None:
                consts[stmt.name] = value
    for stmt in ast.header:
        if isinstance(stmt, Assign):
            d = infer_dim(stmt.value, dims, err)
            if stmt.keyword == "norm" and d != 0:
                raise err(UnitError, "norm must be a plain number", start_pos(stmt.value))
        elif isinstance(stmt, Options):
            _check_args(stmt.args, dims, consts, err, durations=False)

    for block in (ast.sequence, ast.reference):
        if block is not None:
            _check_block(block, dims, consts, err)
    return ast


def _check_block(block, dims, consts, err):
    for item in block:
        if isinstance(item, Repeat):
            if infer_dim(item.count, dims, err) != 0:
                raise err(UnitError, "repeat count must be a plain number", start_pos(item.count))
            n = constant_value(item.count, consts)
            if n is not None and (n < 0 or abs(n - round(n)) > 1e-9):
                raise err(DslSyntaxError, f"repeat count must be a nonnegative integer, got {n}", item.pos)
            _check_block(item.body, dims, consts, err)
        else:
            _check_args(item.args, dims, consts, err, durations=True)


def _check_args(args, dims, consts, err, durations: bool):
    for a in args:
        if a.key in WORD_VALUES:
            if not isinstance(a.value, Var) or a.value.name not in WORD_VALUES[a.key]:
                choices = ", ".join(sorted(WORD_VALUES[a.key]))
                raise err(UnknownKeywordError, f"{a.key} must be one of {choices}", start_pos(a.value))
            continue
        d = infer_dim(a.value, dims, err)
        want = KEY_DIMS[a.key]
        if d != want:
            raise err(UnitError, f"{a.key} must be {_dim_name(want)}, got {_dim_name(d)}", start_pos(a.value))
        if durations and a.key == "dur":
            v = constant_value(a.value, consts)
            if v is not None and v <= 0:
                raise err(NonpositiveDurationError, f"duration must be positive, got {v:g} us", start_pos(a.value))


def parse(text: str, origin: str = "<input>") -> SequenceAst:
    """Parse and statically check a sequence file."""
    return check(Parser(text, origin).parse_file())
