import math
import re
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sicvac.bloch.types import Readout, RfPulse, Wait
from sicvac.dsl import (
    ERROR_KINDS,
    DslError,
    GridError,
    SequenceAst,
    compile,
    parse,
    parse_file,
    serialize,
    shipped_template,
    template_names,
    template_source,
)
from sicvac.dsl.ast import Arg, Assign, Axis, BinOp, Event, Let, Neg, Number, Options, Repeat, Setting, Sweep, Var

CORPUS = Path(__file__).parent / "corpus"
GOOD = sorted((CORPUS / "good").glob("*.seq"))
BAD = sorted((CORPUS / "bad").glob("*.seq"))
EXPECT = re.compile(r"#\s*expect:\s*(\S+)\s+(\d+):(\d+)(?:\s+index=(\d+))?")


# golden corpus


@pytest.mark.parametrize("path", GOOD, ids=[p.name for p in GOOD])
def test_golden_corpus_parses_and_compiles(path):
    ast = parse_file(path)
    compile(ast)


@pytest.mark.parametrize("path", GOOD, ids=[p.name for p in GOOD])
def test_round_trip_keeps_compiled_programs(path):
    ast = parse_file(path)
    again = parse(serialize(ast))
    assert again == ast
    assert serialize(again) == serialize(ast)
    a, b = compile(ast), compile(again)
    assert a.programs == b.programs
    assert np.array_equal(a.x, b.x)


@pytest.mark.parametrize("path", BAD, ids=[p.name for p in BAD])
def test_malformed_corpus_reports_kind_and_position(path):
    text = path.read_text(encoding="utf-8")
    m = EXPECT.match(text.splitlines()[0])
    assert m, "malformed corpus files start with an expect line"
    kind, line, col, index = m.group(1), int(m.group(2)), int(m.group(3)), m.group(4)
    with pytest.raises(DslError) as info:
        compile(parse(text, origin=path.name))
    err = info.value
    assert (err.kind, err.line, err.col) == (kind, line, col)
    if index is not None:
        assert isinstance(err, GridError) and err.index == int(index)
    # the rendered diagnostic names the place and draws a caret under it
    rendered = str(err).splitlines()
    assert rendered[0].startswith(f"{path.name}:{line}:{col}: {kind}:")
    assert rendered[1] == (text.splitlines() + [""])[line - 1]
    assert rendered[2] == " " * (col - 1) + "^"


def test_malformed_corpus_covers_every_error_kind():
    kinds = {EXPECT.match(p.read_text().splitlines()[0]).group(1) for p in BAD}
    assert kinds == set(ERROR_KINDS)


# worked examples


def test_minimal_program_has_three_events():
    ast = parse_file(CORPUS / "good" / "minimal.seq")
    assert [ev.kind for ev in ast.sequence] == ["laser", "rf", "readout"]
    assert ast.reference is None


def test_sweep_grid_is_start_step_stop():
    fam = compile(parse_file(CORPUS / "good" / "minimal.seq"))
    assert len(fam) == 101
    assert fam.x[-1] == pytest.approx(1.0)
    rf = fam.programs[37].events[1]
    assert isinstance(rf, RfPulse) and rf.duration == pytest.approx(0.37)


def test_zero_duration_pulse_is_dropped():
    fam = compile(parse_file(CORPUS / "good" / "minimal.seq"))
    assert len(fam.programs[0].events) == 2


def test_descending_grid():
    fam = compile(parse_file(CORPUS / "good" / "descending_grid.seq"))
    assert np.allclose(fam.x, [0.1, 0.08, 0.06, 0.04, 0.02, 0.0])


def test_cpmg_axis_bookkeeping():
    fam = compile(parse_file(CORPUS / "good" / "cpmg_two_pulses.seq"))
    # two pi pulses around 50 ns spacings: 2*2*50 ns + 2*2*17.5 ns
    assert fam.x[0] == pytest.approx(0.270, abs=1e-12)
    pulses = [ev for ev in fam.programs[0].events if isinstance(ev, RfPulse)]
    assert len(pulses) == 2 + 2 * 2
    waits = [ev.duration for ev in fam.programs[0].events if isinstance(ev, Wait)]
    assert sum(waits) == pytest.approx(0.2)


def test_ramsey_detection_phase_per_grid_point():
    fam = compile(parse_file(CORPUS / "good" / "ramsey_phase.seq"))
    k = int(np.argmin(np.abs(fam.x - 0.025)))
    main = [ev for ev in fam.programs[k].events if isinstance(ev, RfPulse)]
    ref = [ev for ev in fam.programs[k].reference if isinstance(ev, RfPulse)]
    # 40 MHz over 25 ns is one full cycle
    assert main[-1].phase == pytest.approx(2 * math.pi, rel=1e-12)
    assert ref[-1].phase == pytest.approx(3 * math.pi, rel=1e-12)
    assert fam.norm == -2 and fam.center == "v1v3"


def test_empty_grid_gives_empty_family():
    fam = compile(parse_file(CORPUS / "good" / "empty_grid.seq"))
    assert fam.programs == [] and fam.x.size == 0
    assert fam.run().signal.size == 0


def test_units_scale_to_microseconds_and_megahertz():
    fam = compile(parse_file(CORPUS / "good" / "units_and_comments.seq"))
    laser, rf, wait, readout = fam.programs[0].events
    assert laser.duration == pytest.approx(2.0)
    assert rf.duration == pytest.approx(0.005) and rf.rabi == pytest.approx(100.0)
    assert rf.detuning == pytest.approx(-1.5) and rf.hard
    assert wait.duration == pytest.approx(1.5)
    assert isinstance(readout, Readout) and readout.duration == pytest.approx(0.3)
    assert fam.relax.t1 == pytest.approx(500.0)
    assert fam.ensemble.width == pytest.approx(0.25)
    assert fam.pump is None


def test_nested_repeat_expands():
    fam = compile(parse_file(CORPUS / "good" / "nested_repeat.seq"))
    counts = [sum(isinstance(ev, RfPulse) for ev in p.events) for p in fam.programs]
    assert counts == [0, 3, 6, 9, 12]


def test_grid_error_names_the_index():
    with pytest.raises(GridError, match="grid index 6"):
        compile(parse_file(CORPUS / "bad" / "grid_negative_wait.seq"))


def test_compile_is_deterministic():
    text = shipped_template("ramsey_v2")
    a, b = compile(parse(text)), compile(parse(text))
    assert a.programs == b.programs
    assert a.ensemble == b.ensemble


def test_seed_and_member_overrides():
    fam = compile(parse(shipped_template("t1_v1v3")), seed=5, n_members=16)
    assert fam.ensemble.rng_seed == 5 and fam.ensemble.n_members == 16


# templates


def test_template_names():
    names = template_names()
    assert len(names) == 10
    assert {"rabi_v1v3", "cpmg_v2", "t1_v2"} <= set(names)
    with pytest.raises(KeyError):
        template_source("spinlock_v2")


@pytest.mark.parametrize("name", template_names())
def test_templates_match_shipped_files_byte_for_byte(name):
    assert template_source(name) == shipped_template(name)


@pytest.mark.parametrize("name", template_names())
def test_templates_compile_and_round_trip(name):
    ast = parse(shipped_template(name))
    assert serialize(ast) == shipped_template(name)
    fam = compile(ast)
    assert len(fam) > 10
    assert all(p.reference is not None for p in fam.programs)
    assert fam.fit is not None and fam.center == name.split("_")[1]


# generated trees

NAMES = ["a", "b", "tpi", "nu_det", "t_2"]
TIME_UNITS = ["ns", "us", "µs", "ms"]
FREQ_UNITS = ["kHz", "MHz", "GHz"]
KEY_DIMS = {"dur": 1, "phase": 0, "rabi": -1, "detuning": -1, "t1": 1, "t2": 1, "t2_star": 1,
            "sigma": -1, "tau_c": 1, "w_eq": 0, "n": 0, "width": -1, "seed": 0, "rabi_spread": 0}
literals = st.one_of(
    st.integers(0, 10_000).map(float),
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False),
)


@st.composite
def expressions(draw, dim, scope, depth=2):
    """Expression of time dimension ``dim``; ``scope`` maps names to dimensions."""
    if dim == 1:
        leaves = [st.builds(Number, literals, st.sampled_from(TIME_UNITS))]
    elif dim == -1:
        leaves = [st.builds(Number, literals, st.sampled_from(FREQ_UNITS))]
    else:
        leaves = [st.builds(Number, literals), st.just(Var("pi")),
                  st.sampled_from([Axis("x"), Axis("y"), Axis("-x"), Axis("-y")])]
    names = [n for n, d in scope.items() if d == dim]
    if names:
        leaves.append(st.sampled_from(names).map(Var))
    if depth == 0 or draw(st.integers(0, 2)) == 0:
        return draw(st.one_of(leaves))
    op = draw(st.sampled_from(["+", "-", "*", "/", "neg"]))
    if op == "neg":
        return Neg(draw(expressions(dim, scope, depth - 1)))
    if op in "+-":
        left, right = dim, dim
    else:
        left = draw(st.sampled_from([d for d in (-1, 0, 1) if -1 <= (dim - d if op == "*" else d - dim) <= 1]))
        right = dim - left if op == "*" else left - dim
    return BinOp(op, draw(expressions(left, scope, depth - 1)), draw(expressions(right, scope, depth - 1)))


@st.composite
def duration(draw, scope, sweep_var):
    """Durations are positive literals or depend on the sweep variable."""
    if scope.get(sweep_var) == 1 and draw(st.booleans()):
        other = draw(expressions(1, scope, 1))
        return BinOp(draw(st.sampled_from("+-")), Var(sweep_var), other)
    value = draw(st.floats(1e-3, 1e4, allow_nan=False))
    return Number(value, draw(st.sampled_from(TIME_UNITS)))


@st.composite
def arguments(draw, required, optional, scope, sweep_var, with_durations):
    keys = list(required)
    if optional:
        keys += draw(st.lists(st.sampled_from(sorted(optional)), unique=True))
    keys = draw(st.permutations(keys))
    args = []
    for key in keys:
        if key == "hard":
            value = Var(draw(st.sampled_from(["true", "false"])))
        elif key == "dist":
            value = Var(draw(st.sampled_from(["delta", "lorentzian", "gaussian"])))
        elif key == "dur" and with_durations:
            value = draw(duration(scope, sweep_var))
        else:
            value = draw(expressions(KEY_DIMS[key], scope))
        args.append(Arg(key, value))
    return tuple(args)


@st.composite
def events(draw, kind, scope, sweep_var):
    if kind == "rf":
        args = draw(arguments(("dur", "rabi"), {"phase", "detuning", "hard"}, scope, sweep_var, True))
    else:
        args = draw(arguments(("dur",), set(), scope, sweep_var, True))
    return Event(kind, args)


@st.composite
def body(draw, scope, sweep_var, depth=2):
    items = []
    for _ in range(draw(st.integers(0, 3))):
        if depth and draw(st.integers(0, 4)) == 0:
            if scope.get(sweep_var) == 0 and draw(st.booleans()):
                count = BinOp("*", Number(float(draw(st.integers(0, 3)))), Var(sweep_var))
            else:
                count = Number(float(draw(st.integers(0, 4))))
            items.append(Repeat(count, tuple(draw(body(scope, sweep_var, depth - 1)))))
        else:
            items.append(draw(events(draw(st.sampled_from(["laser", "rf", "wait"])), scope, sweep_var)))
    return items


@st.composite
def blocks(draw, scope, sweep_var):
    first = draw(events("laser", scope, sweep_var))
    last = draw(events("readout", scope, sweep_var))
    return (first, *draw(body(scope, sweep_var)), last)


@st.composite
def trees(draw):
    var = draw(st.sampled_from(["tau", "N", "t"]))
    unit = draw(st.sampled_from([None, *TIME_UNITS, *FREQ_UNITS]))
    scope = {var: 0 if unit is None else (1 if unit in TIME_UNITS else -1)}
    header = []
    for name in draw(st.lists(st.sampled_from(NAMES), unique=True, max_size=3)):
        dim = draw(st.sampled_from([-1, 0, 1]))
        header.append(Let(name, draw(expressions(dim, scope))))
        scope[name] = dim
    extra = []
    for kw, choices in (("center", ["v1v3", "v2"]), ("pump", ["v1v3", "v2", "none"]),
                        ("fit", ["rabi", "fid", "exp_decay", "stretched_exp"])):
        if draw(st.booleans()):
            extra.append(Setting(kw, draw(st.sampled_from(choices))))
    if draw(st.booleans()):
        extra.append(Assign("axis", draw(expressions(draw(st.sampled_from([-1, 0, 1])), scope))))
    if draw(st.booleans()):
        extra.append(Assign("norm", draw(expressions(0, scope))))
    if draw(st.booleans()):
        opts = {"t1", "t2", "t2_star", "sigma", "tau_c", "w_eq"}
        extra.append(Options("relax", draw(arguments((), opts, scope, var, False))))
    if draw(st.booleans()):
        opts = {"n", "dist", "width", "seed", "rabi_spread"}
        extra.append(Options("ensemble", draw(arguments((), opts, scope, var, False))))
    header.extend(draw(st.permutations(extra)))
    reference = draw(st.one_of(st.none(), blocks(scope, var)))
    step = draw(st.floats(-100, 100, allow_nan=False).filter(lambda v: v != 0))
    sweep = Sweep(var, draw(st.floats(-1e3, 1e3, allow_nan=False)), step,
                  draw(st.floats(-1e3, 1e3, allow_nan=False)), unit)
    return SequenceAst(tuple(header), draw(blocks(scope, var)), reference, sweep)


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(trees())
def test_parse_serialize_round_trip_on_generated_trees(ast):
    text = serialize(ast)
    back = parse(text)
    assert back == ast
    assert serialize(back) == text


# error totality

GRAMMAR_CHARS = "{};=:()+-*/$# \n.0123456789abcdefghijklmnopqrstuvwxyzµ_@!"


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=GRAMMAR_CHARS, max_size=80))
def test_arbitrary_text_fails_with_a_diagnostic(text):
    try:
        parse(text)
    except DslError as err:
        assert err.line >= 1 and err.col >= 1


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(template_names()), st.data())
def test_damaged_templates_fail_cleanly(name, data):
    text = shipped_template(name)
    i = data.draw(st.integers(0, len(text) - 1))
    j = data.draw(st.integers(i, min(len(text), i + 12)))
    junk = data.draw(st.text(alphabet=GRAMMAR_CHARS, max_size=4))
    damaged = text[:i] + junk + text[j:]
    try:
        fam = compile(parse(damaged), n_members=1)
    except DslError as err:
        assert err.line >= 1 and err.col >= 1
    else:
        assert len(fam.programs) == fam.x.size


def test_error_kinds_are_distinct():
    assert len(ERROR_KINDS) == 9
    assert len({cls for cls in ERROR_KINDS.values()}) == 9
