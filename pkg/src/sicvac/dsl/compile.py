"""Compile a checked sequence tree into one pulse program per sweep point."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..bloch.engine import PumpLink, run_family
from ..bloch.experiments import Curve
from ..bloch.types import (
    DecoherenceParams, EnsembleSpec, LaserPulse, OUNoise, PulseProgram, Readout, RfPulse, Wait,
)
from ..pumping import RateModel
from ..spin import DomainError
from .ast import Assign, Axis, BinOp, Event, Let, Neg, Number, Options, Repeat, SequenceAst, Setting, Var
from .errors import DslSyntaxError, GridError
from .lexer import UNITS
from .parser import start_pos

AXES = {"x": 0.0, "y": math.pi / 2, "-x": math.pi, "-y": 3 * math.pi / 2}
ZERO_TOL = 1e-15
MAX_EVENTS = 2_000_000


class _EvalError(Exception):
    def __init__(self, message, pos):
        super().__init__(message)
        self.pos = pos


def evaluate(expr, env: dict) -> float:
    """Value of ``expr`` in canonical units (us, MHz)."""
    if isinstance(expr, Number):
        return expr.value * (UNITS[expr.unit][0] if expr.unit else 1.0)
    if isinstance(expr, Axis):
        return AXES[expr.name]
    if isinstance(expr, Var):
        if expr.name == "pi":
            return math.pi
        return env[expr.name]
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, env)
    a = evaluate(expr.left, env)
    b = evaluate(expr.right, env)
    if expr.op == "+":
        out = a + b
    elif expr.op == "-":
        out = a - b
    elif expr.op == "*":
        out = a * b
    else:
        if b == 0:
            raise _EvalError("division by zero", expr.pos)
        out = a / b
    if not math.isfinite(out):
        raise _EvalError("arithmetic overflow", expr.pos)
    return out


def sweep_values(ast: SequenceAst) -> np.ndarray:
    """Grid start, start+step, ... up to stop (inclusive), in canonical units."""
    sw = ast.sweep
    factor = UNITS[sw.unit][0] if sw.unit else 1.0
    span = (sw.stop - sw.start) / sw.step
    n = int(math.floor(span + 1e-9)) + 1 if span >= -1e-9 else 0
    return (sw.start + sw.step * np.arange(n)) * factor


@dataclass
class Family:
    """Compiled programs of a sweep plus everything needed to run them."""

    programs: list
    x: np.ndarray
    sweep: np.ndarray
    relax: DecoherenceParams
    ensemble: EnsembleSpec
    pump: RateModel | None
    center: str | None = None
    fit: str | None = None
    norm: float = 1.0
    origin: str = field(default="<input>", repr=False)

    def __len__(self):
        return len(self.programs)

    def run(self, threads: int | None = None) -> Curve:
        """Differential signal per sweep point, in units of the pumped polarization."""
        if not self.programs:
            return Curve(self.x, np.zeros(0), np.zeros(0))
        link = PumpLink.from_model(self.pump)
        readout = self.programs[0].events[-1].duration
        sig = run_family(self.programs, self.relax, self.ensemble, link, threads)
        scale = self.norm * link.w_pumped * link.readout_gain(readout)
        return Curve(
            self.x,
            np.array([s.value for s in sig]) / scale,
            np.array([s.stderr for s in sig]) / abs(scale),
        )


def _opts(ast: SequenceAst, keyword: str) -> dict:
    out = {}
    for stmt in ast.header:
        if isinstance(stmt, Options) and stmt.keyword == keyword:
            out.update({a.key: a for a in stmt.args})
    return out


def _setting(ast: SequenceAst, keyword: str):
    value = None
    for stmt in ast.header:
        if isinstance(stmt, Setting) and stmt.keyword == keyword:
            value = stmt.name
    return value


def _assign(ast: SequenceAst, keyword: str):
    value = None
    for stmt in ast.header:
        if isinstance(stmt, Assign) and stmt.keyword == keyword:
            value = stmt.value
    return value


def compile_ast(ast: SequenceAst, seed: int | None = None, n_members: int | None = None) -> Family:
    """One PulseProgram (with reference) per sweep grid point.

    rf and wait events whose duration evaluates to exactly zero at a grid
    point are dropped; negative durations or failed arithmetic raise
    GridError naming the grid index.
    """
    src, origin = ast.source, ast.origin
    grid = sweep_values(ast)
    lets = [s for s in ast.header if isinstance(s, Let)]
    axis_expr = _assign(ast, "axis")
    norm_expr = _assign(ast, "norm")

    def env_at(v):
        env = {ast.sweep.var: float(v)}
        for let in lets:
            env[let.name] = evaluate(let.value, env)
        return env

    programs, xs = [], []
    for k, v in enumerate(grid):
        try:
            env = env_at(v)
            events = _events(ast.sequence, env, k)
            ref = None if ast.reference is None else _events(ast.reference, env, k)
            xs.append(evaluate(axis_expr, env) if axis_expr is not None else float(v))
        except _EvalError as exc:
            raise GridError(str(exc), k, exc.pos.line, exc.pos.col, src, origin) from None
        programs.append(PulseProgram(tuple(events), None if ref is None else tuple(ref)))

    # header options are evaluated at the first grid point
    const_env = {ast.sweep.var: float(grid[0]) if grid.size else 0.0}
    for let in lets:
        try:
            const_env[let.name] = evaluate(let.value, const_env)
        except _EvalError:
            pass

    def const(expr):
        try:
            return evaluate(expr, const_env)
        except (_EvalError, KeyError) as exc:
            pos = getattr(exc, "pos", expr.pos)
            raise DslSyntaxError(f"cannot evaluate header value: {exc}", pos.line, pos.col, src, origin) from None

    try:
        relax = _relax(_opts(ast, "relax"), const)
    except DomainError as exc:
        raise _header_error(ast, "relax", exc) from None
    try:
        ens = _ensemble(_opts(ast, "ensemble"), const, relax, src, origin)
    except DomainError as exc:
        raise _header_error(ast, "ensemble", exc) from None
    if seed is not None:
        ens = replace(ens, rng_seed=int(seed))
    if n_members is not None:
        ens = replace(ens, n_members=int(n_members))
    center = _setting(ast, "center")
    pump_name = _setting(ast, "pump") or center
    pump = None if pump_name in (None, "none") else RateModel.preset(pump_name)
    norm = const(norm_expr) if norm_expr is not None else 1.0
    if norm == 0:
        raise DslSyntaxError("norm must be nonzero", norm_expr.pos.line, norm_expr.pos.col, src, origin)
    return Family(
        programs, np.array(xs, dtype=float), grid, relax, ens, pump,
        center=center, fit=_setting(ast, "fit"), norm=norm, origin=origin,
    )


def _header_error(ast: SequenceAst, keyword: str, exc: Exception) -> DslSyntaxError:
    stmt = next(s for s in ast.header if isinstance(s, Options) and s.keyword == keyword)
    return DslSyntaxError(str(exc), stmt.pos.line, stmt.pos.col, ast.source, ast.origin)


def _events(items, env, k, out=None) -> list:
    out = [] if out is None else out
    for it in items:
        if isinstance(it, Repeat):
            n = evaluate(it.count, env)
            if n < 0 or abs(n - round(n)) > 1e-9:
                raise _EvalError(f"repeat count must be a nonnegative integer, got {n:g}", it.pos)
            if len(out) + round(n) * len(it.body) > MAX_EVENTS:
                raise _EvalError("program too long", it.pos)
            for _ in range(int(round(n))):
                _events(it.body, env, k, out)
            continue
        ev = _event(it, env)
        if ev is not None:
            out.append(ev)
    return out


def _event(ev: Event, env):
    vals = {}
    for a in ev.args:
        if a.key == "hard":
            vals[a.key] = a.value.name == "true"
        else:
            vals[a.key] = evaluate(a.value, env)
    d = vals["dur"]
    if d < -ZERO_TOL or (d <= ZERO_TOL and ev.kind in ("laser", "readout")):
        raise _EvalError(f"{ev.kind} duration must be positive, got {d:g} us", start_pos(ev.arg("dur").value))
    if d <= ZERO_TOL:
        return None
    if ev.kind == "laser":
        return LaserPulse(d)
    if ev.kind == "readout":
        return Readout(d)
    if ev.kind == "wait":
        return Wait(d)
    return RfPulse(
        d, vals.get("phase", 0.0), vals["rabi"], vals.get("detuning", 0.0), vals.get("hard", False)
    )


def _relax(opts: dict, const) -> DecoherenceParams:
    kw = {}
    if "t1" in opts:
        kw["t1"] = const(opts["t1"].value)
    if "t2" in opts:
        kw["t2"] = const(opts["t2"].value)
    if "t2_star" in opts:
        kw["t2_star"] = const(opts["t2_star"].value) * 1000  # us -> ns
    if "w_eq" in opts:
        kw["w_eq"] = const(opts["w_eq"].value)
    if "sigma" in opts or "tau_c" in opts:
        sigma = const(opts["sigma"].value) if "sigma" in opts else 0.0
        tau_c = const(opts["tau_c"].value) if "tau_c" in opts else 1.0
        kw["noise"] = OUNoise(sigma, tau_c)
    return DecoherenceParams(**kw)


def _ensemble(opts: dict, const, relax: DecoherenceParams, src, origin) -> EnsembleSpec:
    kw = {}
    if "n" in opts:
        kw["n_members"] = int(round(const(opts["n"].value)))
    if "seed" in opts:
        kw["rng_seed"] = int(round(const(opts["seed"].value)))
    if "rabi_spread" in opts:
        kw["rabi_spread"] = const(opts["rabi_spread"].value)
    dist = opts["dist"].value.name if "dist" in opts else "delta"
    kw["distribution"] = dist
    if "width" in opts:
        kw["width"] = const(opts["width"].value)
    elif dist == "lorentzian":
        if relax.t2_star is None:
            pos = opts["dist"].pos
            raise DslSyntaxError(
                "a lorentzian ensemble needs width= or relax t2_star=", pos.line, pos.col, src, origin
            )
        kw["width"] = relax.lorentzian_hwhm
    elif dist == "gaussian":
        pos = opts["dist"].pos
        raise DslSyntaxError("a gaussian ensemble needs width=", pos.line, pos.col, src, origin)
    return EnsembleSpec(**kw)
