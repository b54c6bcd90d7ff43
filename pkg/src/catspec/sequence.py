"""
Text format for experimental pulse sequences (``.seq`` files).

One step per line, ``KIND key=value ...``; ``#`` starts a comment.  An
optional ``MODE freq=1.199MHz`` directive sets the motional frequency used
for phase bookkeeping.  Times accept ``ns``, ``us``, ``ms`` and ``s``;
frequencies ``Hz``, ``kHz`` and ``MHz``; angles are radians or multiples of
``pi`` such as ``pi/2`` or ``3pi/2``.

Step kinds and their keys (``[]`` optional)::

    DopplerCool   duration
    OpticalPump   duration
    SidebandCool  duration
    Hide          duration
    Unhide        duration
    CatPulse      duration, alpha | rabi + eta
    SpecTrain     n, width, period, [delay]      (duration = delay + n * period)
    SpecPulse     duration
    CatInverse    duration
    Rotation      angle, axis (x|y|z|rsb), duration
    Wait          duration
    Detect        window, [basis (z|y)]          (duration = window)
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from importlib import resources
from typing import NamedTuple

from .phasespace import AXIAL_MODE_FREQUENCY, cat_size

__all__ = [
    "SequenceError",
    "ParseError",
    "ScheduleError",
    "Step",
    "SequenceProgram",
    "Diagnostic",
    "TimelineEntry",
    "Timeline",
    "parse",
    "render",
    "validate",
    "schedule",
    "timeline_to_csv",
    "fixture_names",
    "load_fixture",
    "method_for_program",
    "PERIOD_TOLERANCE",
]

PERIOD_TOLERANCE = 0.02

# unit suffix -> power of ten
TIME_UNITS = {"s": 0, "ms": -3, "us": -6, "ns": -9}
FREQ_UNITS = {"MHz": 6, "kHz": 3, "Hz": 0}
SPECTROSCOPY = ("SpecTrain", "SpecPulse")

# key -> value type, per kind; order is the canonical rendering order
_KINDS: dict[str, dict[str, str]] = {
    "DopplerCool": {"duration": "time"},
    "OpticalPump": {"duration": "time"},
    "SidebandCool": {"duration": "time"},
    "Hide": {"duration": "time"},
    "Unhide": {"duration": "time"},
    "CatPulse": {"alpha": "float", "rabi": "freq", "eta": "float", "duration": "time"},
    "SpecTrain": {"n": "int", "width": "time", "period": "time", "delay": "time"},
    "SpecPulse": {"duration": "time"},
    "CatInverse": {"duration": "time"},
    "Rotation": {"angle": "angle", "axis": "choice:x,y,z,rsb", "duration": "time"},
    "Wait": {"duration": "time"},
    "Detect": {"window": "time", "basis": "choice:z,y"},
}
_REQUIRED = {kind: {k for k in keys if k not in ("alpha", "rabi", "eta", "delay", "basis")}
             for kind, keys in _KINDS.items()}
_DEFAULTS = {"SpecTrain": {"delay": 0.0}, "Detect": {"basis": "z"}}


class SequenceError(ValueError):
    pass


class ParseError(SequenceError):
    """Malformed sequence text; carries 1-based `line` and `column`."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        super().__init__(f"{line}:{column}: {message}" if line else message)


class ScheduleError(SequenceError):
    pass


@dataclass(frozen=True)
class Step:
    kind: str
    args: tuple[tuple[str, object], ...]
    line: int = field(default=0, compare=False)

    def get(self, key: str, default=None):
        for k, v in self.args:
            if k == key:
                return v
        return default

    @property
    def duration(self) -> float:
        if self.kind == "SpecTrain":
            return self.get("delay") + self.get("n") * self.get("period")
        if self.kind == "Detect":
            return self.get("window")
        return self.get("duration")

    @property
    def alpha(self) -> float | None:
        """Cat amplitude of a CatPulse, given directly or from ``rabi``, ``eta`` and ``duration``."""
        if self.kind != "CatPulse":
            return None
        if self.get("alpha") is not None:
            return self.get("alpha")
        return cat_size(self.get("eta"), 2 * math.pi * self.get("rabi"), self.get("duration"))


@dataclass(frozen=True)
class SequenceProgram:
    steps: tuple[Step, ...]
    mode_frequency: float = AXIAL_MODE_FREQUENCY

    def __post_init__(self):
        if not self.steps:
            raise SequenceError("no steps")
        if not self.mode_frequency > 0:
            raise SequenceError("mode frequency must be positive")

    def __len__(self):
        return len(self.steps)

    @property
    def kinds(self) -> list[str]:
        return [s.kind for s in self.steps]

    @property
    def total_duration(self) -> float:
        return math.fsum(s.duration for s in self.steps)


class Diagnostic(NamedTuple):
    severity: str  # "error" or "warning"
    message: str
    line: int = 0

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{self.severity}: {where}{self.message}"


# -- parsing ------------------------------------------------------------------

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_QUANTITY = re.compile(rf"^({_NUMBER})\s*([A-Za-z]*)$")
_PI_ANGLE = re.compile(rf"^({_NUMBER})?\*?pi(?:/({_NUMBER}))?$")
_TOKEN = re.compile(r"\S+")


def _quantity(text: str, units: dict[str, int], what: str) -> float:
    # decimal scaling keeps "60ns" equal to the float literal 60e-9
    m = _QUANTITY.match(text)
    if not m or m.group(2) not in units:
        raise ValueError(f"malformed {what} {text!r} (units: {', '.join(units)})")
    return float(Decimal(m.group(1)).scaleb(units[m.group(2)]))


def _angle(text: str) -> float:
    m = _PI_ANGLE.match(text)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    if re.fullmatch(_NUMBER, text):
        return float(text)
    raise ValueError(f"malformed angle {text!r}")


def _convert(kind: str, key: str, text: str):
    typ = _KINDS[kind][key]
    if typ == "time":
        v = _quantity(text, TIME_UNITS, "time")
    elif typ == "freq":
        v = _quantity(text, FREQ_UNITS, "frequency")
    elif typ == "int":
        if not re.fullmatch(r"\d+", text):
            raise ValueError(f"malformed integer {text!r}")
        v = int(text)
    elif typ == "float":
        if not re.fullmatch(_NUMBER, text):
            raise ValueError(f"malformed number {text!r}")
        v = float(text)
    elif typ == "angle":
        v = _angle(text)
    else:
        choices = typ.split(":", 1)[1].split(",")
        if text not in choices:
            raise ValueError(f"{key} must be one of {', '.join(choices)}")
        return text
    if not math.isfinite(v) or v < 0 and key != "angle":
        raise ValueError(f"{key} must be finite and non-negative")
    return v


def _check_step(kind: str, values: dict, lineno: int):
    missing = sorted(_REQUIRED[kind] - values.keys())
    if missing:
        raise ParseError(f"{kind}: missing required key {missing[0]!r}", lineno, 1)
    if kind == "CatPulse":
        has_alpha = "alpha" in values
        has_drive = "rabi" in values and "eta" in values
        if has_alpha == has_drive or (has_alpha and ("rabi" in values or "eta" in values)):
            raise ParseError("CatPulse needs either alpha= or both rabi= and eta=", lineno, 1)
    if kind == "SpecTrain":
        if values["n"] < 1:
            raise ParseError("SpecTrain n must be >= 1", lineno, 1)
        if not 0 < values["width"] <= values["period"]:
            raise ParseError("SpecTrain width must lie in (0, period]", lineno, 1)
    for key in ("duration", "window"):
        if key in values and not values[key] > 0:
            raise ParseError(f"{kind}: {key} must be positive", lineno, 1)


def parse(text: str) -> SequenceProgram:
    """Parse ``.seq`` text; raises :class:`ParseError` with line and column."""
    steps = []
    freq = AXIAL_MODE_FREQUENCY
    seen_mode = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(body)]
        if not tokens:
            continue
        (kind, col0), rest = tokens[0], tokens[1:]
        if kind == "MODE":
            if steps or seen_mode:
                raise ParseError("MODE must appear once, before the first step", lineno, col0)
            if len(rest) != 1 or not rest[0][0].startswith("freq="):
                raise ParseError("MODE takes exactly one key, freq=", lineno, col0)
            try:
                freq = _quantity(rest[0][0][5:], FREQ_UNITS, "frequency")
            except ValueError as exc:
                raise ParseError(str(exc), lineno, rest[0][1] + 5) from None
            if not freq > 0:
                raise ParseError("mode frequency must be positive", lineno, rest[0][1] + 5)
            seen_mode = True
            continue
        if kind not in _KINDS:
            raise ParseError(f"unknown step kind {kind!r}", lineno, col0)
        values = {}
        for tok, col in rest:
            key, eq, val = tok.partition("=")
            if not eq or not key or not val:
                raise ParseError(f"expected key=value, got {tok!r}", lineno, col)
            if key not in _KINDS[kind]:
                raise ParseError(f"{kind} has no key {key!r}", lineno, col)
            if key in values:
                raise ParseError(f"duplicate key {key!r}", lineno, col)
            try:
                values[key] = _convert(kind, key, val)
            except ValueError as exc:
                raise ParseError(str(exc), lineno, col + len(key) + 1) from None
        _check_step(kind, values, lineno)
        for key, default in _DEFAULTS.get(kind, {}).items():
            values.setdefault(key, default)
        args = tuple((k, values[k]) for k in _KINDS[kind] if k in values)
        steps.append(Step(kind, args, lineno))
    if not steps:
        raise ParseError("no steps")
    return SequenceProgram(tuple(steps), freq)


# -- rendering ----------------------------------------------------------------

def _format_quantity(value: float, units: dict[str, int]) -> str:
    """Shortest exact spelling of `value` over the available unit suffixes."""
    exact = Decimal(repr(float(value)))
    best = None
    for unit, exp in units.items():
        mantissa = format(exact.scaleb(-exp).normalize(), "f")
        if best is None or len(mantissa) < len(best[0]):
            best = (mantissa, unit)
    return best[0] + best[1]


def _format_value(kind: str, key: str, value) -> str:
    typ = _KINDS[kind][key]
    if typ == "time":
        return _format_quantity(value, TIME_UNITS)
    if typ == "freq":
        return _format_quantity(value, FREQ_UNITS)
    if typ == "int" or typ.startswith("choice"):
        return str(value)
    return repr(float(value))


def render(program: SequenceProgram) -> str:
    """Canonical text form; ``parse(render(p)) == p``."""
    lines = [f"MODE freq={_format_quantity(program.mode_frequency, FREQ_UNITS)}"]
    for step in program.steps:
        parts = [step.kind] + [f"{k}={_format_value(step.kind, k, v)}" for k, v in step.args]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


# -- validation ---------------------------------------------------------------

def validate(program: SequenceProgram, period_tolerance: float = PERIOD_TOLERANCE) -> list[Diagnostic]:
    """Structural and timing checks.  Problems are returned, never raised."""
    out: list[Diagnostic] = []
    steps = program.steps
    hidden = False
    open_cats: list[Step] = []
    for step in steps:
        k = step.kind
        if k == "Hide":
            if hidden:
                out.append(Diagnostic("error", "Hide while already hidden", step.line))
            hidden = True
        elif k == "Unhide":
            if not hidden:
                out.append(Diagnostic("error", "Unhide without preceding Hide", step.line))
            hidden = False
        elif k in SPECTROSCOPY and not hidden:
            out.append(Diagnostic("error", f"{k} outside a Hide/Unhide block", step.line))
        elif k == "CatPulse":
            open_cats.append(step)
        elif k == "CatInverse":
            if open_cats:
                open_cats.pop()
            else:
                out.append(Diagnostic("error", "CatInverse without matching CatPulse", step.line))
        if k == "SpecTrain":
            expected = 1.0 / program.mode_frequency
            rel = abs(step.get("period") - expected) / expected
            if rel > period_tolerance:
                out.append(Diagnostic(
                    "warning",
                    f"SpecTrain period {step.get('period') * 1e9:.1f} ns differs from "
                    f"1/nu = {expected * 1e9:.1f} ns by {100 * rel:.1f}%",
                    step.line))
    if hidden:
        out.append(Diagnostic("error", "Hide without matching Unhide", steps[-1].line))
    for cat in open_cats:
        out.append(Diagnostic("error", "CatPulse without matching CatInverse", cat.line))
    detects = [i for i, s in enumerate(steps) if s.kind == "Detect"]
    if not detects:
        out.append(Diagnostic("error", "sequence has no Detect step", steps[-1].line))
    else:
        if detects != [len(steps) - 1]:
            out.append(Diagnostic("error", "Detect must be the last and only detection step",
                                  steps[detects[0]].line))
        last = steps[detects[-1]]
        if last.get("basis") == "y":
            rotations = [s for s in steps[:detects[-1]] if s.kind == "Rotation" and s.get("axis") in ("x", "y")]
            if not rotations:
                out.append(Diagnostic("error", "sigma_y detection needs a Rotation before Detect", last.line))
    return out


# -- scheduling ---------------------------------------------------------------

class TimelineEntry(NamedTuple):
    start: float
    end: float
    kind: str
    phi_sc: float | None


class Timeline(NamedTuple):
    entries: tuple[TimelineEntry, ...]
    delay: float
    total_duration: float

    @property
    def scatter_phases(self) -> list[float]:
        return [e.phi_sc for e in self.entries if e.phi_sc is not None]


def schedule(program: SequenceProgram, delay_sweep=(0.0,)) -> list[Timeline]:
    """Absolute step times for each sweep delay.

    The sweep delay is inserted just before the first spectroscopy step,
    which shifts every later step.  Spectroscopy steps carry
    ``phi_sc = 2 pi nu (delay_param + sweep_delay)``.
    """
    errors = [d for d in validate(program) if d.severity == "error"]
    if errors:
        raise ScheduleError("cannot schedule an invalid program: " + "; ".join(map(str, errors)))
    nu = program.mode_frequency
    first_spec = next((i for i, s in enumerate(program.steps) if s.kind in SPECTROSCOPY), None)
    timelines = []
    for delay in delay_sweep:
        delay = float(delay)
        if not (delay >= 0 and math.isfinite(delay)):
            raise ScheduleError(f"sweep delay must be finite and non-negative, got {delay}")
        t = 0.0
        entries = []
        for i, step in enumerate(program.steps):
            if i == first_spec:
                t += delay
            start, end = t, t + step.duration
            if entries and start < entries[-1].end:
                raise ScheduleError(f"step {i} overlaps its predecessor")
            phi = None
            if step.kind in SPECTROSCOPY:
                phi = 2 * math.pi * nu * ((step.get("delay") or 0.0) + delay)
            entries.append(TimelineEntry(start, end, step.kind, phi))
            t = end
        total = program.total_duration + (delay if first_spec is not None else 0.0)
        timelines.append(Timeline(tuple(entries), delay, total))
    return timelines


TIMELINE_HEADER = ("start_s", "end_s", "kind", "phi_sc_rad")


def timeline_to_csv(timeline: Timeline) -> str:
    rows = [",".join(TIMELINE_HEADER)]
    for e in timeline.entries:
        phi = "" if e.phi_sc is None else repr(e.phi_sc)
        rows.append(f"{e.start!r},{e.end!r},{e.kind},{phi}")
    return "\n".join(rows) + "\n"


# -- fixtures -----------------------------------------------------------------

def _fixture_dir():
    return resources.files("catspec").joinpath("fixtures")


def fixture_names() -> list[str]:
    return sorted(p.name for p in _fixture_dir().iterdir() if p.name.endswith(".seq"))


def load_fixture(name: str) -> SequenceProgram:
    if not name.endswith(".seq"):
        name += ".seq"
    return parse(_fixture_dir().joinpath(name).read_text(encoding="utf-8"))


def method_for_program(program: SequenceProgram) -> str:
    """Name of the detection method (as used by :mod:`catspec.statistics`) a program implements."""
    kinds = program.kinds
    basis = program.steps[-1].get("basis", "z") if kinds[-1] == "Detect" else "z"
    if "CatPulse" in kinds:
        if basis == "z":
            return "css_sigma_z"
        return "css_sigma_y" if "SidebandCool" in kinds else "css_sigma_y_no_gsc"
    return "direct_sigma_z" if basis == "z" else "phase_sensitive_sigma_y"
