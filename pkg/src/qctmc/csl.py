"""Continuous stochastic logic: syntax tree, parser, printer and checker.

Grammar (whitespace is insignificant)::

    model    := "P" cmp number "[" path "]"
    cmp      := "=" | "<" | ">"
    path     := state ( "U" interval state )+
    state    := unary ( "&" unary )*
    unary    := "!" unary | "true" | "false" | atom | "(" state ")"
    interval := "(" number "," ( number | "inf" ) "]"

Intervals are absolute and left-open, right-closed. Only the last one may
be unbounded.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .expm import ExpmOptions
from .measure import MeasureResult, QuadratureOptions, UntilSpec, until_measure
from .model import InstantaneousDescription, QuantumCtmc

__all__ = [
    "CslSyntaxError",
    "Atom",
    "TrueF",
    "FalseF",
    "Not",
    "And",
    "PathFormula",
    "ModelFormula",
    "Verdict",
    "parse",
    "to_text",
    "sat_set",
    "atoms",
    "until_spec",
    "path_measure",
    "check",
    "DECISION_TOL",
]

DECISION_TOL = 1e-6


class CslSyntaxError(ValueError):
    def __init__(self, message, position=None):
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class Not:
    child: "StateFormula"


@dataclass(frozen=True)
class And:
    left: "StateFormula"
    right: "StateFormula"


StateFormula = Union[Atom, TrueF, FalseF, Not, And]


@dataclass(frozen=True)
class PathFormula:
    """``phases[0] U^intervals[0] phases[1] ... U^intervals[K-1] phases[K]``."""

    phases: tuple
    intervals: tuple

    def __post_init__(self):
        if len(self.intervals) < 1 or len(self.phases) != len(self.intervals) + 1:
            raise ValueError("a path formula needs K >= 1 intervals and K + 1 phases")
        _check_intervals(self.intervals)


@dataclass(frozen=True)
class ModelFormula:
    comparator: str
    threshold: float
    path: PathFormula

    def __post_init__(self):
        if self.comparator not in ("=", "<", ">"):
            raise ValueError(f"unknown comparator {self.comparator!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside [0,1]")


@dataclass
class Verdict:
    truth: bool
    probability: float
    margin: float
    warning: str | None = None
    result: MeasureResult | None = None
    notes: tuple = ()


def _check_intervals(intervals, position=None):
    prev_b = 0.0
    last = len(intervals) - 1
    for k, (a, b) in enumerate(intervals):
        if math.isinf(a):
            raise CslSyntaxError(f"interval {k}: left endpoint must be finite", position)
        if math.isinf(b) and k != last:
            raise CslSyntaxError(f"interval {k}: inf is only allowed as the final right endpoint", position)
        if a < 0:
            raise CslSyntaxError(f"interval {k}: negative endpoint", position)
        if b < a:
            raise CslSyntaxError(f"interval {k}: reversed interval ({a:g},{b:g}]", position)
        if a < prev_b:
            raise CslSyntaxError(
                f"interval {k}: ({a:g},{b:g}] overlaps the preceding interval ending at {prev_b:g}",
                position,
            )
        prev_b = b


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[()\[\],!&=<>])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"U", "true", "false", "inf"}


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise CslSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = mt.lastgroup
        if kind != "ws":
            tokens.append((kind, mt.group(), pos))
        pos = mt.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def peek(self, offset=1):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.tok
        if text != value or kind == "end":
            shown = text or "end of input"
            raise CslSyntaxError(f"expected {value!r}, found {shown!r}", pos)
        return self.advance()

    def number(self, allow_inf=False):
        kind, text, pos = self.tok
        if kind == "number":
            self.advance()
            return float(text)
        if allow_inf and kind == "ident" and text == "inf":
            self.advance()
            return math.inf
        raise CslSyntaxError(f"expected a number, found {text or 'end of input'!r}", pos)

    def top(self):
        kind, text, pos = self.tok
        if kind == "ident" and text == "P" and self.peek()[1] in ("=", "<", ">"):
            out = self.model()
        else:
            state = self.state()
            out = self.path_tail(state) if self.tok[1] == "U" else state
        if self.tok[0] != "end":
            raise CslSyntaxError(f"unexpected trailing input {self.tok[1]!r}", self.tok[2])
        return out

    def model(self):
        self.expect("P")
        cmp_tok = self.advance()
        threshold_pos = self.tok[2]
        threshold = self.number()
        if not 0.0 <= threshold <= 1.0:
            raise CslSyntaxError(f"threshold outside [0,1]: {threshold:g}", threshold_pos)
        self.expect("[")
        path = self.path_tail(self.state())
        self.expect("]")
        return ModelFormula(cmp_tok[1], threshold, path)

    def path_tail(self, first):
        phases = [first]
        intervals = []
        start = self.tok[2]
        if self.tok[1] != "U":
            raise CslSyntaxError("expected 'U'", start)
        while self.tok[1] == "U" and self.tok[0] == "ident":
            self.advance()
            intervals.append(self.interval())
            phases.append(self.state())
        _check_intervals(intervals, start)
        return PathFormula(tuple(phases), tuple(intervals))

    def interval(self):
        self.expect("(")
        a = self.number()
        self.expect(",")
        b = self.number(allow_inf=True)
        self.expect("]")
        return (a, b)

    def state(self):
        left = self.unary()
        while self.tok[1] == "&":
            self.advance()
            left = And(left, self.unary())
        return left

    def unary(self):
        kind, text, pos = self.tok
        if text == "!":
            self.advance()
            return Not(self.unary())
        if text == "(":
            self.advance()
            inner = self.state()
            self.expect(")")
            return inner
        if kind == "ident":
            if text == "true":
                self.advance()
                return TrueF()
            if text == "false":
                self.advance()
                return FalseF()
            if text in _KEYWORDS:
                raise CslSyntaxError(f"reserved word {text!r} cannot be an atom", pos)
            self.advance()
            return Atom(text)
        raise CslSyntaxError(f"expected a state formula, found {text or 'end of input'!r}", pos)


def parse(text: str):
    """Parse a model, path or state formula."""
    return _Parser(text).top()


def _num(x):
    if math.isinf(x):
        return "inf"
    return repr(float(x))


def to_text(f) -> str:
    if isinstance(f, ModelFormula):
        return f"P{f.comparator}{_num(f.threshold)} [ {to_text(f.path)} ]"
    if isinstance(f, PathFormula):
        parts = [_state_text(f.phases[0])]
        for (a, b), phase in zip(f.intervals, f.phases[1:]):
            parts.append(f"U({_num(a)},{_num(b)}] {_state_text(phase)}")
        return " ".join(parts)
    return _state_text(f)


def _state_text(f, nested=False):
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Not):
        return "!" + _state_text(f.child, nested=True)
    if isinstance(f, And):
        body = f"{_state_text(f.left)} & {_state_text(f.right, nested=True)}"
        return f"({body})" if nested else body
    raise TypeError(f"not a state formula: {f!r}")


def atoms(f):
    """Atomic propositions mentioned in a formula."""
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, Not):
        return atoms(f.child)
    if isinstance(f, And):
        return atoms(f.left) | atoms(f.right)
    if isinstance(f, PathFormula):
        return set().union(*(atoms(p) for p in f.phases))
    if isinstance(f, ModelFormula):
        return atoms(f.path)
    return set()


def sat_set(m: QuantumCtmc, f) -> frozenset:
    """Classical states satisfying the state formula ``f``.

    Atoms that label no state denote the empty set.
    """
    if isinstance(f, TrueF):
        return frozenset(m.states)
    if isinstance(f, FalseF):
        return frozenset()
    if isinstance(f, Atom):
        return frozenset(s for s in m.states if f.name in m.label(s))
    if isinstance(f, Not):
        return frozenset(m.states) - sat_set(m, f.child)
    if isinstance(f, And):
        return sat_set(m, f.left) & sat_set(m, f.right)
    raise TypeError(f"not a state formula: {f!r}")


def until_spec(m: QuantumCtmc, path: PathFormula) -> UntilSpec:
    return UntilSpec(tuple(sat_set(m, p) for p in path.phases), path.intervals)


def path_measure(m, rho0, path: PathFormula, quad=None, expm_opts=None) -> MeasureResult:
    return until_measure(m, rho0, until_spec(m, path), quad, expm_opts)


def _unknown_atom_notes(m, f):
    missing = sorted(atoms(f) - m.propositions)
    return tuple(f"atom {name!r} labels no state; it denotes the empty set" for name in missing)


def decide(comparator, probability, threshold, decision_tol=DECISION_TOL):
    """Numeric verdict ``(truth, margin, warning)`` for ``probability ~ threshold``."""
    margin = abs(probability - threshold)
    if comparator == "=":
        truth = margin <= decision_tol
    elif comparator == "<":
        truth = probability < threshold
    elif comparator == ">":
        truth = probability > threshold
    else:
        raise ValueError(f"unknown comparator {comparator!r}")
    warning = "verdict within numerical tolerance" if margin < decision_tol else None
    return truth, margin, warning


def check(
    m: QuantumCtmc,
    rho0: InstantaneousDescription,
    chi: ModelFormula,
    quad: QuadratureOptions | None = None,
    expm_opts: ExpmOptions | None = None,
    decision_tol: float = DECISION_TOL,
) -> Verdict:
    """Decide ``P~c [path]`` numerically.

    The comparison is exact on the computed probability; when that value
    lies within ``decision_tol`` of the threshold the verdict carries a
    warning. The ``=`` comparator holds when the two agree to ``decision_tol``.
    """
    if isinstance(chi, str):
        chi = parse(chi)
    if not isinstance(chi, ModelFormula):
        raise TypeError("check expects a model formula P~c [ path ]")
    result = path_measure(m, rho0, chi.path, quad, expm_opts)
    truth, margin, warning = decide(chi.comparator, result.probability, chi.threshold, decision_tol)
    numeric = result.diagnostics.get("warnings") or []
    if numeric:
        warning = "; ".join(([warning] if warning else []) + numeric)
    return Verdict(truth, result.probability, margin, warning, result, _unknown_atom_notes(m, chi))
