"""Complex-variable expressions in z1..zn.

Grammar (whitespace insignificant)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := ('-' | '+') unary | power
    power    := primary ('^' exponent)?
    exponent := INT ('^' exponent)?          # right-associative, folded
    primary  := NUMBER | 'i' | 'z'k | FUNC '(' expr ')' | '(' expr ')'

NUMBER is a decimal literal with an optional ``i`` suffix (``2i``, ``1.5e-3i``).
FUNC is one of exp, sin, cos, conj. ``conj`` exists only so the holomorphy
checker has a witness; any expression containing it is flagged.

Evaluation is vectorised: a point argument of shape ``(..., n)`` yields an
array of shape ``(...)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import EvaluationError, ExprSyntaxError, SingularityError

FUNCTIONS = ("exp", "sin", "cos", "conj")


@dataclass(frozen=True)
class Const:
    value: complex


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, BinOp, Neg, Pow, Call]


def children(node: Node):
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, (Neg,)):
        return (node.operand,)
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, Call):
        return (node.arg,)
    return ()


def walk(node: Node):
    stack = [node]
    while stack:
        nd = stack.pop()
        yield nd
        stack.extend(children(nd))


@dataclass(frozen=True)
class Expression:
    """Parsed expression together with its declared dimension."""

    root: Node
    dimension: int
    text: str = field(default="", compare=False)

    @property
    def non_holomorphic(self) -> bool:
        return any(isinstance(nd, Call) and nd.func == "conj" for nd in walk(self.root))

    @property
    def max_index(self) -> int:
        return max((nd.index for nd in walk(self.root) if isinstance(nd, Var)), default=0)

    def __call__(self, point):
        return evaluate(self, point)

    def __str__(self):
        return to_text(self.root)


@dataclass(frozen=True)
class EvalContext:
    dimension: int
    point: tuple

    def __post_init__(self):
        if len(self.point) != self.dimension:
            raise ValueError(f"point has {len(self.point)} coordinates, context declares {self.dimension}")


# -- lexer -------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos), text)
        kind = m.lastgroup
        if kind != "ws":
            out.append(_Tok(kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    out.append(_Tok("end", "", _byte_offset(text, len(text))))
    return out


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text, n):
        self.text = text
        self.n = n
        self.toks = _tokenize(text)
        self.k = 0

    @property
    def tok(self):
        return self.toks[self.k]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ExprSyntaxError(msg, tok.offset, self.text)

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.k += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.k += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.k += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self):
        tok = self.tok
        if tok.kind == "op" and tok.text == "-":
            raise self.error("negative exponents are not supported")
        if tok.kind != "num" or not tok.text.isdigit():
            raise self.error("exponent must be a nonnegative integer literal")
        self.k += 1
        value = int(tok.text)
        if self.accept("^"):
            value = value ** self.exponent()
        return value

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.k += 1
            if tok.text.endswith("i"):
                return Const(complex(0.0, float(tok.text[:-1])))
            return Const(complex(float(tok.text), 0.0))
        if tok.kind == "ident":
            self.k += 1
            name = tok.text
            if name == "i":
                return Const(1j)
            m = re.fullmatch(r"z([1-9]\d*)", name)
            if m:
                idx = int(m.group(1))
                if idx > self.n:
                    raise self.error(f"variable {name} exceeds dimension {self.n}", tok)
                return Var(idx)
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            raise self.error(f"unknown identifier {name!r}", tok)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def parse(text: str, n: int) -> Expression:
    """Parse ``text`` as an expression in ``z1..zn``."""
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text or "")
    if n < 0:
        raise ValueError("dimension must be nonnegative")
    return Expression(_Parser(text, n).parse(), n, text)


# -- printing ----------------------------------------------------------------

def _fmt_const(c: complex) -> str:
    if c.imag == 0 and c.real >= 0:
        return repr(c.real)
    if c.real == 0 and c.imag >= 0:
        return repr(c.imag) + "i"
    return f"({repr(c.real)} + {repr(c.imag)}i)"


def to_text(node: Node) -> str:
    """Render ``node`` so that parsing it back yields an equal tree.

    Exact only for constants the parser itself produces (nonnegative real or
    nonnegative imaginary); other constants round-trip by value.
    """
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return f"z{node.index}"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, Pow):
        return f"({to_text(node.base)}^{node.exponent})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# -- evaluation --------------------------------------------------------------

_UFUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "conj": np.conj}


def _offending(pts, mask):
    flat = pts.reshape(-1, pts.shape[-1])
    k = int(np.flatnonzero(np.broadcast_to(mask, pts.shape[:-1]).ravel())[0])
    return tuple(complex(c) for c in flat[k])


def _eval(node, pts):
    if isinstance(node, Const):
        return np.full(pts.shape[:-1], node.value, dtype=complex)
    if isinstance(node, Var):
        return pts[..., node.index - 1]
    if isinstance(node, BinOp):
        a = _eval(node.left, pts)
        b = _eval(node.right, pts)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        zero = b == 0
        if np.any(zero):
            raise SingularityError(f"division by zero in {to_text(node)}", point=_offending(pts, zero))
        return a / b
    if isinstance(node, Neg):
        return -_eval(node.operand, pts)
    if isinstance(node, Pow):
        base = _eval(node.base, pts)
        out = np.ones_like(base)
        e = node.exponent
        # square-and-multiply keeps results bit-reproducible across numpy versions
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out
    if isinstance(node, Call):
        return _UFUNCS[node.func](_eval(node.arg, pts))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(expr: Expression, point):
    """Evaluate at a point (tuple, EvalContext) or a batch ``(..., n)``.

    Scalar input returns a Python complex; array input returns an array.
    """
    if isinstance(point, EvalContext):
        if point.dimension != expr.dimension:
            raise ValueError(f"context dimension {point.dimension} != expression dimension {expr.dimension}")
        point = point.point
    scalar = not isinstance(point, np.ndarray)
    pts = np.asarray(point, dtype=complex)
    if pts.ndim == 0:
        pts = pts.reshape(1)
    if expr.dimension and pts.shape[-1] != expr.dimension:
        raise ValueError(f"point dimension {pts.shape[-1]} does not match expression dimension {expr.dimension}")
    with np.errstate(all="ignore"):
        val = _eval(expr.root, pts)
    bad = ~np.isfinite(val)
    if np.any(bad):
        raise EvaluationError(f"non-finite value of {expr.text or expr}", point=_offending(pts, bad))
    if scalar:
        return complex(val)
    return val


def wirtinger_residual(f, z, i: int, h: float = 1e-5) -> float:
    """Central-difference estimate of ``|df/d(conj z_i)|`` at ``z``.

    ``f`` is an Expression or any callable on a point tuple.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    z = tuple(complex(c) for c in z)
    if not 1 <= i <= len(z):
        raise IndexError(f"index {i} out of range 1..{len(z)}")

    def shifted(delta):
        w = list(z)
        w[i - 1] = w[i - 1] + delta
        return complex(f(tuple(w)))

    fx = (shifted(h) - shifted(-h)) / (2 * h)
    fy = (shifted(1j * h) - shifted(-1j * h)) / (2 * h)
    return abs(0.5 * (fx + 1j * fy))
