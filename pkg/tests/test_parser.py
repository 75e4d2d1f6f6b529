import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsim.sequence import bundled_fig3
from spinsim.sequence.parser import (
    Action,
    ParseError,
    Point,
    SequenceProgram,
    Step,
    format_quantity,
    parse_sequence,
    serialize,
)


def test_minimal_program():
    p = parse_sequence("point A vl=-0.05 vr=-0.05\nstep A dwell=1us")
    assert len(p.points) == 1 and len(p.steps) == 1
    assert p.points["A"].vl == -0.05
    assert p.steps[0].dwell == 1e-6


def test_units_and_comments():
    p = parse_sequence(
        "# header\n"
        "point A vl=-20mV vr=1.5V   # trailing\n"
        "step A dwell=250ns action=pulse target=right duration=333.3ps f=60GHz phase=1.5\n"
        "step A dwell=2ms action=empty target=left ramp=1ns\n"
    )
    s0, s1 = p.steps
    assert p.points["A"].vl == -0.02 and p.points["A"].vr == 1.5
    assert s0.dwell == 250e-9
    assert s0.action == Action("pulse", "right", 60e9, 333.3e-12, 1.5)
    assert s1.ramp == 1e-9 and s1.action.kind == "empty"
    assert s0.pos.line == 3


def test_micro_sign_accepted():
    assert parse_sequence("point A vl=0 vr=0\nstep A dwell=3µs").steps[0].dwell == pytest.approx(3e-6)


@pytest.mark.parametrize(
    "text, line, needle",
    [
        ("point A vl=0 vr=0\nstep Z dwell=1us", 2, "undeclared point 'Z'"),
        ("point A vl=0 vr=0\npoint A vl=1 vr=1", 2, "duplicate point"),
        ("point A vl=0 vr=0\nwait A", 2, "unknown keyword"),
        ("point A vl=0", 1, "missing vr="),
        ("point A vl=0 vr=0\nstep A", 2, "missing dwell="),
        ("point A vl=0 vr=0\nstep A dwell=-1ns", 2, "non-negative"),
        ("point A vl=0 vr=0\nstep A dwell=1us action=pulse target=left", 2, "needs duration="),
        ("point A vl=0 vr=0\nstep A dwell=1us action=pulse target=left duration=0ps", 2, "positive"),
        ("point A vl=0 vr=0\nstep A dwell=1us action=measure_ero", 2, "needs target="),
        ("point A vl=0 vr=0\nstep A dwell=1us action=measure_ero target=middle", 2, "unknown target"),
        ("point A vl=0 vr=0\nstep A dwell=1us action=dance", 2, "unknown action"),
        ("point A vl=0 vr=0\nstep A dwell=1us target=left", 2, "not valid for action none"),
        ("point A vl=0 vr=0\nstep A dwell=1mV", 2, "does not measure time"),
        ("point A vl=0 vr=0\nstep A dwell=1us dwell=2us", 2, "duplicate field"),
        ("point A vl=0 vr=0\nstep A dwell=1us colour=red", 2, "unknown field"),
        ("point A vl=0 vr=0\nstep A dwell", 2, "key=value"),
        ("point A vl=1e999 vr=0", 1, "out of range"),
        ("point 9A vl=0 vr=0", 1, "invalid point name"),
    ],
)
def test_rejections_carry_positions(text, line, needle):
    with pytest.raises(ParseError, match=needle) as ei:
        parse_sequence(text)
    assert ei.value.line == line
    assert ei.value.column >= 1


def test_syntax_error_lists_expected_tokens():
    with pytest.raises(ParseError) as ei:
        parse_sequence("point A vl=0 vr=0\nstep A dwell=1us action=dance")
    assert "pulse" in ei.value.expected
    assert ei.value.column == len("step A dwell=1us action=") + 1


def test_invalid_utf8_position():
    with pytest.raises(ParseError) as ei:
        parse_sequence(b"point A vl=0 vr=0\nstep A \xff")
    assert (ei.value.line, ei.value.column) == (2, 8)


def test_empty_program():
    p = parse_sequence("")
    assert p == SequenceProgram({}, ())
    assert serialize(p) == ""
    assert parse_sequence("\n# only comments\n   \n") == p


def test_fig3_bundled():
    p = parse_sequence(bundled_fig3())
    assert sorted(p.points) == list("ABCDEFG")
    assert len(p.steps) == 7
    kinds = [(s.point, s.action.kind, s.action.target) for s in p.steps]
    assert kinds == [
        ("A", "none", None),
        ("B", "init", None),
        ("C", "init", None),
        ("D", "pulse", "left"),
        ("E", "measure_ero", "left"),
        ("F", "empty", "left"),
        ("G", "measure_ero", "right"),
    ]


def test_fig3_round_trip_and_canonical_order():
    p = parse_sequence(bundled_fig3())
    text = serialize(p)
    assert parse_sequence(text) == p
    assert serialize(parse_sequence(text)) == text
    names = [ln.split()[1] for ln in text.splitlines() if ln.startswith("point")]
    assert names == sorted(names)


@pytest.mark.parametrize(
    "value, dim, text",
    [
        (333.3e-12, "time", "333.3ps"),
        (1e-6, "time", "1us"),
        (10e-6, "time", "10us"),
        (0.0, "time", "0s"),
        (-0.02, "voltage", "-20mV"),
        (0.0215, "voltage", "21.5mV"),
        (60e9, "frequency", "60GHz"),
        (1.25, "angle", "1.25"),
        (1e-18, "time", "0.000001ps"),
    ],
)
def test_format_quantity(value, dim, text):
    assert format_quantity(value, dim) == text


# ---------------------------------------------------------- properties

names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,6}", fullmatch=True).filter(lambda s: s not in ("point", "step"))
finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)
nonneg = st.floats(allow_nan=False, allow_infinity=False, min_value=0, max_value=1e3)
positive = st.floats(allow_nan=False, allow_infinity=False, min_value=1e-15, max_value=1e3)
targets = st.sampled_from(["left", "right"])

actions = st.one_of(
    st.just(Action()),
    st.just(Action("init")),
    st.builds(lambda t: Action("measure_ero", t), targets),
    st.builds(lambda t: Action("empty", t), targets),
    st.builds(
        lambda t, f, d, ph: Action("pulse", t, f, d, ph),
        targets,
        st.one_of(st.none(), st.floats(min_value=1.0, max_value=1e12)),
        positive,
        st.floats(min_value=-10, max_value=10, allow_nan=False),
    ),
)


@st.composite
def programs(draw):
    pnames = draw(st.lists(names, min_size=0, max_size=5, unique=True))
    points = {n: Point(n, draw(finite), draw(finite)) for n in pnames}
    steps = ()
    if pnames:
        steps = tuple(
            Step(draw(st.sampled_from(pnames)), draw(nonneg), draw(actions), draw(nonneg))
            for _ in range(draw(st.integers(0, 6)))
        )
    return SequenceProgram(points, steps)


@given(programs())
def test_serialize_round_trip(p):
    text = serialize(p)
    q = parse_sequence(text)
    assert q == p
    assert serialize(q) == text


@given(programs())
def test_parse_serialize_parse_idempotent(p):
    q = parse_sequence(serialize(p))
    assert parse_sequence(serialize(q)) == q


@settings(max_examples=500)
@given(st.binary(max_size=200))
def test_parser_total_on_bytes(data):
    try:
        parse_sequence(data)
    except ParseError as e:
        assert e.line >= 1 and e.column >= 1


keywords = st.sampled_from(["point", "step", "#", "A", "B", "vl=", "vr=", "dwell=", "action=pulse", "target=left",
                            "duration=", "1us", "-3mV", "=", "1e400", "ps", "\n", " ", "\t", "µ", "nan", "inf"])


@settings(max_examples=500)
@given(st.lists(keywords, max_size=30).map("".join))
def test_parser_total_on_token_soup(text):
    try:
        p = parse_sequence(text)
    except ParseError as e:
        assert e.line >= 1 and e.column >= 1
    else:
        assert parse_sequence(serialize(p)) == p
        for s in p.steps:
            assert math.isfinite(s.dwell) and s.dwell >= 0
