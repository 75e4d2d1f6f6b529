"""Line-oriented control-sequence language.

::

    # comment
    point A vl=-20mV vr=-20mV
    step A dwell=1us
    step D dwell=5ns action=pulse target=left duration=333.3ps phase=0
    step E dwell=10us action=measure_ero target=left ramp=1ns

Values take SI suffixes (fs ps ns us ms s / uV mV V / Hz kHz MHz GHz / rad).
A bare number is read in base SI units. Numbers are handled as decimals so
that serialising and re-parsing gives back identical floats.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal

__all__ = [
    "ParseError",
    "Pos",
    "Point",
    "Action",
    "Step",
    "SequenceProgram",
    "ACTIONS",
    "TARGETS",
    "parse_sequence",
    "serialize",
    "format_quantity",
]

ACTIONS = ("none", "init", "pulse", "measure_ero", "empty")
TARGETS = ("left", "right")

_PREFIX = {"f": -15, "p": -12, "n": -9, "u": -6, "µ": -6, "m": -3, "": 0, "k": 3, "M": 6, "G": 9}
_DIMENSIONS = {"time": "s", "voltage": "V", "frequency": "Hz", "angle": "rad"}
_FIELD_DIMENSION = {
    "vl": "voltage",
    "vr": "voltage",
    "dwell": "time",
    "ramp": "time",
    "duration": "time",
    "f": "frequency",
    "phase": "angle",
}
_CANONICAL_PREFIX = {
    "time": ("ps", "ns", "us", "ms", "s"),
    "voltage": ("uV", "mV", "V"),
    "frequency": ("Hz", "kHz", "MHz", "GHz"),
}
_NUMBER = re.compile(r"([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(\S*)\Z")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ParseError(ValueError):
    """Rejected sequence text, with 1-based line and column."""

    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        self.message = message
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"line {line}, column {column}: {message}{hint}")


@dataclass(frozen=True)
class Pos:
    line: int
    column: int


@dataclass(frozen=True)
class Point:
    name: str
    vl: float
    vr: float
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Action:
    kind: str = "none"
    target: str | None = None
    f: float | None = None
    duration: float | None = None
    phase: float = 0.0


@dataclass(frozen=True)
class Step:
    point: str
    dwell: float
    action: Action = Action()
    ramp: float = 0.0
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SequenceProgram:
    points: dict[str, Point]
    steps: tuple[Step, ...]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SequenceProgram):
            return NotImplemented
        return self.points == other.points and self.steps == other.steps

    def __hash__(self) -> int:
        return hash((tuple(sorted(self.points.items())), self.steps))


def _split(line: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _quantity(text: str, dim: str, lineno: int, col: int) -> float:
    m = _NUMBER.match(text)
    if not m:
        raise ParseError(f"malformed number {text!r}", lineno, col, ("number with optional unit",))
    num, unit = m.groups()
    base = _DIMENSIONS[dim]
    if dim == "angle":
        if unit not in ("", "rad"):
            raise ParseError(f"unit {unit!r} is not an angle", lineno, col, ("rad",))
        exp = 0
    elif unit == "":
        exp = 0
    elif unit.endswith(base) and unit[: -len(base)] in _PREFIX:
        exp = _PREFIX[unit[: -len(base)]]
    else:
        raise ParseError(f"unit {unit!r} does not measure {dim}", lineno, col + len(num), (base,))
    try:
        value = float(Decimal(num).scaleb(exp))
    except (ArithmeticError, ValueError):
        raise ParseError(f"number {text!r} out of range", lineno, col) from None
    if value != value or value in (float("inf"), float("-inf")):
        raise ParseError(f"number {text!r} out of range", lineno, col)
    return value


def _fields(tokens, lineno, allowed) -> dict[str, tuple[str, int]]:
    out: dict[str, tuple[str, int]] = {}
    for tok, col in tokens:
        key, sep, val = tok.partition("=")
        if not sep or not key or not val:
            raise ParseError(f"expected key=value, got {tok!r}", lineno, col, ("key=value",))
        if key not in allowed:
            raise ParseError(f"unknown field {key!r}", lineno, col, tuple(sorted(allowed)))
        if key in out:
            raise ParseError(f"duplicate field {key!r}", lineno, col)
        out[key] = (val, col + len(key) + 1)
    return out


_STEP_FIELDS = {"dwell", "action", "target", "f", "duration", "phase", "ramp"}
_ACTION_FIELDS = {
    "none": set(),
    "init": set(),
    "pulse": {"target", "f", "duration", "phase"},
    "measure_ero": {"target"},
    "empty": {"target"},
}


def _parse_step(tokens, lineno, kw_col) -> tuple[Step, int]:
    if len(tokens) < 2:
        raise ParseError("step needs a point name", lineno, kw_col + 4, ("point name",))
    name, ncol = tokens[1]
    if not _NAME.match(name):
        raise ParseError(f"invalid point name {name!r}", lineno, ncol, ("identifier",))
    f = _fields(tokens[2:], lineno, _STEP_FIELDS)
    if "dwell" not in f:
        raise ParseError("step is missing dwell=", lineno, ncol, ("dwell=<time>",))
    dwell = _quantity(f["dwell"][0], "time", lineno, f["dwell"][1])
    if dwell < 0:
        raise ParseError("dwell must be non-negative", lineno, f["dwell"][1])
    ramp = 0.0
    if "ramp" in f:
        ramp = _quantity(f["ramp"][0], "time", lineno, f["ramp"][1])
        if ramp < 0:
            raise ParseError("ramp must be non-negative", lineno, f["ramp"][1])
    kind = "none"
    if "action" in f:
        kind, kcol = f["action"]
        if kind not in ACTIONS:
            raise ParseError(f"unknown action {kind!r}", lineno, kcol, ACTIONS)
    allowed = _ACTION_FIELDS[kind]
    for key in ("target", "f", "duration", "phase"):
        if key in f and key not in allowed:
            raise ParseError(f"field {key!r} not valid for action {kind}", lineno, f[key][1] - len(key) - 1)
    target = None
    if "target" in allowed:
        if "target" not in f:
            raise ParseError(f"action {kind} needs target=", lineno, ncol, ("target=left", "target=right"))
        target, tcol = f["target"]
        if target not in TARGETS:
            raise ParseError(f"unknown target {target!r}", lineno, tcol, TARGETS)
    freq = duration = None
    phase = 0.0
    if kind == "pulse":
        if "duration" not in f:
            raise ParseError("pulse needs duration=", lineno, ncol, ("duration=<time>",))
        duration = _quantity(f["duration"][0], "time", lineno, f["duration"][1])
        if not duration > 0:
            raise ParseError("pulse duration must be positive", lineno, f["duration"][1])
        if "f" in f:
            freq = _quantity(f["f"][0], "frequency", lineno, f["f"][1])
        if "phase" in f:
            phase = _quantity(f["phase"][0], "angle", lineno, f["phase"][1])
    action = Action(kind=kind, target=target, f=freq, duration=duration, phase=phase)
    return Step(point=name, dwell=dwell, action=action, ramp=ramp, pos=Pos(lineno, kw_col)), ncol


def parse_sequence(text: str | bytes) -> SequenceProgram:
    """Parse sequence text; every rejection is a :class:`ParseError` with a position."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            head = bytes(text)[: exc.start]
            line = head.count(b"\n") + 1
            col = exc.start - (head.rfind(b"\n") + 1) + 1
            raise ParseError("invalid UTF-8", line, col) from None
    points: dict[str, Point] = {}
    steps: list[tuple[Step, int]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0]
        tokens = _split(line)
        if not tokens:
            continue
        kw, col = tokens[0]
        if kw == "point":
            if len(tokens) < 2:
                raise ParseError("point needs a name", lineno, col + 5, ("point name",))
            name, ncol = tokens[1]
            if not _NAME.match(name):
                raise ParseError(f"invalid point name {name!r}", lineno, ncol, ("identifier",))
            if name in points:
                first = points[name].pos
                raise ParseError(f"duplicate point {name!r} (first declared on line {first.line})", lineno, ncol)
            f = _fields(tokens[2:], lineno, {"vl", "vr"})
            for key in ("vl", "vr"):
                if key not in f:
                    raise ParseError(f"point is missing {key}=", lineno, ncol, (f"{key}=<voltage>",))
            vl = _quantity(f["vl"][0], "voltage", lineno, f["vl"][1])
            vr = _quantity(f["vr"][0], "voltage", lineno, f["vr"][1])
            points[name] = Point(name, vl, vr, Pos(lineno, col))
        elif kw == "step":
            steps.append(_parse_step(tokens, lineno, col))
        else:
            raise ParseError(f"unknown keyword {kw!r}", lineno, col, ("point", "step", "#"))
    for step, ncol in steps:
        if step.point not in points:
            raise ParseError(f"undeclared point {step.point!r}", step.pos.line, ncol, tuple(sorted(points)))
    return SequenceProgram(points=points, steps=tuple(s for s, _ in steps))


def format_quantity(value: float, dim: str) -> str:
    """Canonical text for a value: engineering prefix, shortest exact mantissa."""
    dec = Decimal(repr(float(value)))
    if dim == "angle":
        return _plain(dec)
    units = _CANONICAL_PREFIX[dim]
    base = _DIMENSIONS[dim]
    if dec == 0:
        return "0" + base
    exps = [_PREFIX[u[: -len(base)]] for u in units]
    mag = abs(dec)
    chosen = exps[0]
    for e in exps:
        if mag >= Decimal(1).scaleb(e):
            chosen = e
    unit = units[exps.index(chosen)]
    return _plain(dec.scaleb(-chosen)) + unit


def _plain(dec: Decimal) -> str:
    s = format(dec.normalize(), "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def serialize(program: SequenceProgram) -> str:
    """Canonical text: points sorted by name, then steps in program order."""
    lines = []
    for name in sorted(program.points):
        p = program.points[name]
        lines.append(f"point {name} vl={format_quantity(p.vl, 'voltage')} vr={format_quantity(p.vr, 'voltage')}")
    for s in program.steps:
        parts = [f"step {s.point}", f"dwell={format_quantity(s.dwell, 'time')}"]
        a = s.action
        if a.kind != "none":
            parts.append(f"action={a.kind}")
        if a.target is not None:
            parts.append(f"target={a.target}")
        if a.kind == "pulse":
            parts.append(f"duration={format_quantity(a.duration, 'time')}")
            if a.f is not None:
                parts.append(f"f={format_quantity(a.f, 'frequency')}")
            if a.phase != 0:
                parts.append(f"phase={format_quantity(a.phase, 'angle')}")
        if s.ramp:
            parts.append(f"ramp={format_quantity(s.ramp, 'time')}")
        lines.append(" ".join(parts))
    return "".join(line + "\n" for line in lines)
