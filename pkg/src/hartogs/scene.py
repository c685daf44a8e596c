"""Scene files: JSON descriptions of Omega, the hole A, f and the output grid.

Example::

    {
      "n": 2,
      "omega": {"kind": "polydisc", "center": [0, 0], "radius": 1.5},
      "hole": {"kind": "closed_polydisc", "center": [0, 0], "radius": 0.5},
      "i": 2,
      "function": "1/(z2-3)",
      "reference": "1/(z2-3)",
      "grid": {"counts": [21, 21, 9, 9]},
      "eps": 0.4
    }

Complex numbers are written as a number or an ``[re, im]`` pair. Hole kinds are
``closed_polydisc``, ``hartogs_complement`` (only with a ``hartogs_figure``
omega) and ``predicate_expr``, a boolean combination of modulus inequalities
such as ``"|z1| <= 0.5 and not (|z2| < 0.2)"`` with a required bounding
``radius``. For a Hartogs-figure omega, f is given on the figure and extended
to the whole unit polydisc.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .complexcore import Polydisc, as_complex
from .errors import ExprSyntaxError, SceneError
from .expr import Expression, parse
from .extension import Extender, Tolerances
from .geometry import (DomainSpec, RemovableSetSpec, _closed_bound, check_bounded, check_subset,
                       closed_polydisc_set, hartogs_figure, polydisc_domain)
from .quadrature import QuadratureConfig

DEFAULT_EPS = 0.2
DEFAULT_STEP = 0.1
DEFAULT_GRID_COUNT = 9

_COMPLEX = {"oneOf": [
    {"type": "number"},
    {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
]}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

SCENE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "omega", "hole", "function"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "omega": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["kind", "radius"],
             "properties": {"kind": {"const": "polydisc"},
                            "center": {"type": "array", "items": _COMPLEX},
                            "radius": _POSITIVE}},
            {"type": "object", "additionalProperties": False, "required": ["kind", "q"],
             "properties": {"kind": {"const": "hartogs_figure"},
                            "q": {"type": "array", "items": {"type": "number"}}}},
        ]},
        "hole": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["kind", "radius"],
             "properties": {"kind": {"const": "closed_polydisc"},
                            "center": {"type": "array", "items": _COMPLEX},
                            "radius": _POSITIVE}},
            {"type": "object", "additionalProperties": False, "required": ["kind"],
             "properties": {"kind": {"const": "hartogs_complement"}}},
            {"type": "object", "additionalProperties": False, "required": ["kind", "expr", "radius"],
             "properties": {"kind": {"const": "predicate_expr"},
                            "expr": {"type": "string", "minLength": 1},
                            "center": {"type": "array", "items": _COMPLEX},
                            "radius": _POSITIVE}},
        ]},
        "i": {"type": "integer", "minimum": 1},
        "function": {"type": "string", "minLength": 1},
        "reference": {"type": "string", "minLength": 1},
        "grid": {"type": "object", "additionalProperties": False, "required": ["counts"],
                 "properties": {
                     "counts": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                     "ranges": {"type": "array", "items": {
                         "type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
                 }},
        "eps": _POSITIVE,
        "step": _POSITIVE,
        "verify_samples": {"type": "integer", "minimum": 1},
        "tolerances": {"type": "object", "additionalProperties": False,
                       "properties": {k: _POSITIVE for k in ("quadrature", "cross_check", "coincidence", "grid")}},
    },
}


# -- modulus predicates ---------------------------------------------------------

_PRED_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<mod>\|\s*z([1-9]\d*)\s*\|)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<rel><=|>=|<|>)
  | (?P<word>and|or|not)\b
  | (?P<paren>[()])
""", re.VERBOSE)

_RELATIONS = {"<=": np.less_equal, "<": np.less, ">=": np.greater_equal, ">": np.greater}


def parse_modulus_predicate(text: str, n: int):
    """Compile e.g. ``"|z1| <= 0.5 and |z2| >= 0.2"`` into a vectorised predicate."""
    toks = []
    pos = 0
    while pos < len(text):
        m = _PRED_TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r} in hole predicate", pos, text)
        if m.lastgroup != "ws":
            toks.append((m.lastgroup, m.group(), pos, m))
        pos = m.end()
    toks.append(("end", "", len(text), None))
    k = 0

    def peek():
        return toks[k]

    def take(kind, value=None):
        nonlocal k
        t = toks[k]
        if t[0] != kind or (value is not None and t[1] != value):
            raise ExprSyntaxError(f"expected {value or kind}, found {t[1] or 'end of input'!r}", t[2], text)
        k += 1
        return t

    def operand():
        nonlocal k
        t = peek()
        if t[0] == "mod":
            idx = int(t[3].group(3))
            if idx > n:
                raise ExprSyntaxError(f"|z{idx}| exceeds dimension {n}", t[2], text)
            k += 1
            return lambda pts, j=idx - 1: np.abs(pts[..., j])
        if t[0] == "num":
            k += 1
            val = float(t[1])
            return lambda pts, v=val: v
        raise ExprSyntaxError(f"expected |zk| or a number, found {t[1] or 'end of input'!r}", t[2], text)

    def comparison():
        lhs = operand()
        rel = _RELATIONS[take("rel")[1]]
        rhs = operand()
        return lambda pts: rel(lhs(pts), rhs(pts))

    def negation():
        nonlocal k
        t = peek()
        if t[0] == "word" and t[1] == "not":
            k += 1
            inner = negation()
            return lambda pts: ~inner(pts)
        if t[0] == "paren" and t[1] == "(":
            k += 1
            inner = disjunction()
            take("paren", ")")
            return inner
        return comparison()

    def conjunction():
        terms = [negation()]
        while peek()[0] == "word" and peek()[1] == "and":
            take("word", "and")
            terms.append(negation())
        return lambda pts: np.logical_and.reduce([np.broadcast_to(t(pts), pts.shape[:-1]) for t in terms])

    def disjunction():
        terms = [conjunction()]
        while peek()[0] == "word" and peek()[1] == "or":
            take("word", "or")
            terms.append(conjunction())
        return lambda pts: np.logical_or.reduce([np.broadcast_to(t(pts), pts.shape[:-1]) for t in terms])

    pred = disjunction()
    if peek()[0] != "end":
        t = peek()
        raise ExprSyntaxError(f"unexpected {t[1]!r} in hole predicate", t[2], text)
    return lambda pts: pred(np.asarray(pts, dtype=complex))


# -- scenes ---------------------------------------------------------------------

@dataclass(frozen=True)
class Scene:
    n: int
    omega: DomainSpec          # domain the extension lives on
    hole: RemovableSetSpec
    figure: DomainSpec | None  # set where f is given, when it is not omega minus hole by construction
    slot: int
    function: Expression
    reference: Expression | None
    grid_counts: tuple
    grid_ranges: tuple
    eps: float
    step: float
    tolerances: Tolerances
    verify_samples: int = 6
    source: str = ""

    def extender(self, verify: bool = True, tolerances: Tolerances | None = None) -> Extender:
        tol = tolerances or self.tolerances
        return Extender(self.function, self.omega, self.hole, self.slot, eps=self.eps, step=self.step,
                        cfg=QuadratureConfig(rtol=tol.quadrature), tolerances=tol, verify=verify,
                        verify_samples=self.verify_samples)

    def grid_points(self):
        """Grid points in C order over (re z1, im z1, re z2, ...)."""
        axes = [np.linspace(lo, hi, c) for c, (lo, hi) in zip(self.grid_counts, self.grid_ranges)]
        for combo in itertools.product(*axes):
            yield tuple(complex(combo[2 * j], combo[2 * j + 1]) for j in range(self.n))


def _center(spec, n, where):
    raw = spec.get("center", [0] * n)
    if len(raw) != n:
        raise SceneError(f"{where}.center has {len(raw)} coordinates, expected n={n}")
    return tuple(as_complex(c) for c in raw)


def _parse_expr(text, n, where):
    try:
        return parse(text, n)
    except ExprSyntaxError as exc:
        raise SceneError(f"{where}: {exc}") from exc


def scene_from_dict(data: dict, source: str = "") -> Scene:
    try:
        jsonschema.validate(data, SCENE_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SceneError(f"{source or 'scene'}: invalid at /{path}: {exc.message}") from None
    n = data["n"]
    om = data["omega"]
    hole = data["hole"]
    figure = None
    if om["kind"] == "polydisc":
        omega = polydisc_domain(_center(om, n, "omega"), om["radius"])
        default_slot = n
    else:
        if len(om["q"]) != n:
            raise SceneError(f"omega.q has {len(om['q'])} entries, expected n={n}")
        try:
            hf = hartogs_figure(om["q"], n)
        except ValueError as exc:
            raise SceneError(f"omega: {exc}") from exc
        omega, figure, default_slot = hf.ambient, hf.figure, hf.slot
    if hole["kind"] == "closed_polydisc":
        a = closed_polydisc_set(_center(hole, n, "hole"), hole["radius"])
    elif hole["kind"] == "hartogs_complement":
        if om["kind"] != "hartogs_figure":
            raise SceneError("hole kind 'hartogs_complement' needs a 'hartogs_figure' omega")
        a = hf.removable
    else:
        try:
            pred = parse_modulus_predicate(hole["expr"], n)
        except ExprSyntaxError as exc:
            raise SceneError(f"hole.expr: {exc}") from exc
        a = RemovableSetSpec(n, pred, _closed_bound(_center(hole, n, "hole"), hole["radius"]),
                             name=hole["expr"])
    slot = data.get("i", default_slot)
    if not 1 <= slot <= n:
        raise SceneError(f"slot i={slot} out of range 1..{n}")
    witness = check_bounded(a)
    if witness is not None:
        raise SceneError(f"hole predicate holds at {witness}, outside its bounding radius")
    witness = check_subset(a, omega)
    if witness is not None:
        raise SceneError(f"hole is not contained in omega: sampled witness {witness}")

    function = _parse_expr(data["function"], n, "function")
    reference = _parse_expr(data["reference"], n, "reference") if "reference" in data else None

    grid = data.get("grid", {})
    counts = tuple(grid.get("counts", [DEFAULT_GRID_COUNT] * (2 * n)))
    if len(counts) != 2 * n:
        raise SceneError(f"grid.counts needs {2 * n} entries (re/im per coordinate), got {len(counts)}")
    if "ranges" in grid:
        ranges = tuple(tuple(r) for r in grid["ranges"])
        if len(ranges) != 2 * n:
            raise SceneError(f"grid.ranges needs {2 * n} entries, got {len(ranges)}")
    else:
        b = omega.bound
        ranges = tuple(r for c in b.center for r in ((c.real - b.radius, c.real + b.radius),
                                                     (c.imag - b.radius, c.imag + b.radius)))
    tol = Tolerances(**data.get("tolerances", {}))
    return Scene(n=n, omega=omega, hole=a, figure=figure, slot=slot, function=function, reference=reference,
                 grid_counts=counts, grid_ranges=ranges, eps=float(data.get("eps", DEFAULT_EPS)),
                 step=float(data.get("step", DEFAULT_STEP)), tolerances=tol,
                 verify_samples=int(data.get("verify_samples", 6)), source=source)


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneError(f"cannot read scene {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: JSON syntax error at line {exc.lineno}, column {exc.colno} "
                         f"(offset {exc.pos}): {exc.msg}") from None
    return scene_from_dict(data, source=str(path))


def representative_base(a: RemovableSetSpec, i: int):
    """A base point of pi^i(A) near the centre of A's bounding polydisc."""
    from .extension import _grid_candidates
    from .geometry import in_projection

    bound = a.bound.project(i)
    cand = _grid_candidates(bound, 17 if bound.dimension == 1 else 5)
    center = np.asarray(bound.center)
    order = np.argsort(np.sqrt((np.abs(cand - center) ** 2).sum(axis=-1)), kind="stable")
    cand = np.concatenate([center[None, :], cand[order]])
    for s in range(0, len(cand), 64):
        block = cand[s:s + 64]
        hit = in_projection(a, i, block)
        if hit.any():
            return tuple(complex(c) for c in block[np.flatnonzero(hit)[0]])
    return None
