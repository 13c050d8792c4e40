"""Scalar expressions in the variables x1..xn, w1..wd.

Grammar (whitespace insignificant)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' nonneg-integer)?
    base   := number | ident | '(' expr ')' | '-' factor | func '(' expr ')'
    ident  := ('x'|'w') positive-integer
    func   := sin | cos | exp | ln | sqrt
    number := decimal literal (optional fraction and exponent)

Powers are restricted to non-negative integer exponents so that every
expression is C^2 wherever it is defined.  Differentiation is exact on the
tree; the only simplification applied is neutral-element elimination
(u+0, u*1, u*0, u^0, u^1), never factoring or constant folding.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    ExponentError,
    ExpressionSyntaxError,
    VariableIndexError,
)

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Neg",
    "Call",
    "ProblemSpec",
    "parse",
    "evaluate",
    "eval_array",
    "differentiate",
    "render",
    "max_indices",
]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")


# ---------------------------------------------------------------------------
# AST node types.  All nodes are frozen: trees are immutable after build.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Const:
    """Real literal.  ``parse`` only ever produces non-negative values;

    a negative value renders as a negation and re-reads as ``Neg(Const)``.
    """

    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("constants must be finite")


@dataclass(frozen=True, slots=True)
class Var:
    """Reference to x<index> or w<index> (1-based)."""

    axis: str  # "x" or "w"
    index: int

    def __post_init__(self):
        if self.axis not in ("x", "w"):
            raise ValueError(f"axis must be 'x' or 'w', got {self.axis!r}")
        if self.index < 1:
            raise VariableIndexError(f"variable index must be >= 1, got {self.index}")

    @property
    def name(self) -> str:
        return f"{self.axis}{self.index}"


@dataclass(frozen=True, slots=True)
class Add:
    a: "Expression"
    b: "Expression"


@dataclass(frozen=True, slots=True)
class Sub:
    a: "Expression"
    b: "Expression"


@dataclass(frozen=True, slots=True)
class Mul:
    a: "Expression"
    b: "Expression"


@dataclass(frozen=True, slots=True)
class Div:
    a: "Expression"
    b: "Expression"


@dataclass(frozen=True, slots=True)
class Pow:
    """Integer power with non-negative exponent."""

    base: "Expression"
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or isinstance(self.exponent, bool):
            raise ExponentError(f"exponent must be an integer, got {self.exponent!r}")
        if self.exponent < 0:
            raise ExponentError(f"exponent must be >= 0, got {self.exponent}")


@dataclass(frozen=True, slots=True)
class Neg:
    a: "Expression"


@dataclass(frozen=True, slots=True)
class Call:
    fn: str
    a: "Expression"

    def __post_init__(self):
        if self.fn not in FUNCTIONS:
            raise ValueError(f"unknown function {self.fn!r}")


Expression = Union[Const, Var, Add, Sub, Mul, Div, Pow, Neg, Call]


def max_indices(e: Expression) -> tuple[int, int]:
    """Largest x-index and w-index referenced by ``e`` (0 when absent)."""
    mx = mw = 0
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            if node.axis == "x":
                mx = max(mx, node.index)
            else:
                mw = max(mw, node.index)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.extend((node.a, node.b))
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, (Neg, Call)):
            stack.append(node.a)
    return mx, mw


@dataclass(frozen=True, slots=True)
class ProblemSpec:
    """Dimensions and defining expressions of the parametric program.

    ``f0`` is the objective and ``F`` the single functional constraint of

        minimize f0(x, w)  subject to  F(x, w) <= 0,   x in R^n, w in R^d.
    """

    n: int
    d: int
    f0: Expression
    F: Expression

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise DimensionMismatch(f"dimensions must be >= 1, got n={self.n}, d={self.d}")
        for label, e in (("f0", self.f0), ("F", self.F)):
            mx, mw = max_indices(e)
            if mx > self.n or mw > self.d:
                raise VariableIndexError(
                    f"{label} references x{mx}/w{mw} beyond dimensions n={self.n}, d={self.d}"
                )


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z]+\d*")
_INT_RE = re.compile(r"\d+$")


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind  # "num" | "name" | "op" | "end"
        self.text = text
        self.pos = pos


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        m = _NUMBER_RE.match(source, i)
        if m:
            tokens.append(_Token("num", m.group(), i))
            i = m.end()
            continue
        m = _NAME_RE.match(source, i)
        if m:
            tokens.append(_Token("name", m.group(), i))
            i = m.end()
            continue
        if c in "+-*/^()":
            tokens.append(_Token("op", c, i))
            i += 1
            continue
        raise ExpressionSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str, n: int, d: int):
        self.tokens = _tokenize(source)
        self.k = 0
        self.n = n
        self.d = d

    def peek(self) -> _Token:
        return self.tokens[self.k]

    def advance(self) -> _Token:
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_op(self, op: str):
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ExpressionSyntaxError(f"expected {op!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return self.advance()

    def parse(self) -> Expression:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionSyntaxError(f"unexpected trailing input {tok.text!r}", tok.pos)
        return e

    def expr(self) -> Expression:
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expression:
        e = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self) -> Expression:
        e = self.base()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            tok = self.peek()
            if tok.kind != "num" or not _INT_RE.match(tok.text):
                raise ExponentError(
                    f"exponent after '^' must be a non-negative integer literal, "
                    f"found {tok.text or 'end of input'!r} at position {tok.pos}"
                )
            self.advance()
            e = Pow(e, int(tok.text))
        return e

    def base(self) -> Expression:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.factor())
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        if tok.kind == "name":
            self.advance()
            return self.name(tok)
        raise ExpressionSyntaxError(
            f"expected a number, variable, function or '(', found {tok.text or 'end of input'!r}",
            tok.pos,
        )

    def name(self, tok: _Token) -> Expression:
        m = re.fullmatch(r"([xw])(\d+)", tok.text)
        if m:
            axis, idx = m.group(1), int(m.group(2))
            if idx == 0:
                raise VariableIndexError(f"variable index 0 in {tok.text!r} (indices are 1-based)")
            bound = self.n if axis == "x" else self.d
            if idx > bound:
                raise VariableIndexError(
                    f"{tok.text!r} exceeds declared dimension ({axis} has {bound} component(s))"
                )
            return Var(axis, idx)
        if tok.text in FUNCTIONS:
            self.expect_op("(")
            arg = self.expr()
            self.expect_op(")")
            return Call(tok.text, arg)
        raise ExpressionSyntaxError(f"unknown identifier {tok.text!r}", tok.pos)


def parse(source: str, n: int, d: int) -> Expression:
    """Parse ``source`` into an expression tree over x1..xn, w1..wd."""
    if n < 1 or d < 1:
        raise DimensionMismatch(f"dimensions must be >= 1, got n={n}, d={d}")
    return _Parser(source, n, d).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate(e: Expression, x, w) -> float:
    """Evaluate ``e`` at the point (x, w).

    Raises DomainError when the value leaves the reals (log/sqrt of a
    negative argument, division by zero, overflow).
    """
    v = _eval_scalar(e, x, w)
    if not math.isfinite(v):
        raise DomainError(f"expression evaluated to {v}")
    return v


def _eval_scalar(e: Expression, x, w) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        vec = x if e.axis == "x" else w
        if e.index > len(vec):
            raise DimensionMismatch(
                f"{e.name} referenced but only {len(vec)} {e.axis}-component(s) supplied"
            )
        return float(vec[e.index - 1])
    if isinstance(e, Add):
        return _eval_scalar(e.a, x, w) + _eval_scalar(e.b, x, w)
    if isinstance(e, Sub):
        return _eval_scalar(e.a, x, w) - _eval_scalar(e.b, x, w)
    if isinstance(e, Mul):
        return _eval_scalar(e.a, x, w) * _eval_scalar(e.b, x, w)
    if isinstance(e, Div):
        num = _eval_scalar(e.a, x, w)
        den = _eval_scalar(e.b, x, w)
        if den == 0.0:
            raise DomainError("division by zero")
        return num / den
    if isinstance(e, Pow):
        try:
            return _eval_scalar(e.base, x, w) ** e.exponent
        except OverflowError:
            raise DomainError("overflow in power") from None
    if isinstance(e, Neg):
        return -_eval_scalar(e.a, x, w)
    if isinstance(e, Call):
        arg = _eval_scalar(e.a, x, w)
        try:
            if e.fn == "sin":
                return math.sin(arg)
            if e.fn == "cos":
                return math.cos(arg)
            if e.fn == "exp":
                return math.exp(arg)
            if e.fn == "ln":
                if arg <= 0.0:
                    raise DomainError(f"ln of non-positive argument {arg}")
                return math.log(arg)
            if arg < 0.0:
                raise DomainError(f"sqrt of negative argument {arg}")
            return math.sqrt(arg)
        except OverflowError:
            raise DomainError("overflow in function evaluation") from None
    raise TypeError(f"not an expression node: {e!r}")


def eval_array(e: Expression, x: np.ndarray, w: np.ndarray):
    """Vectorized evaluation over batches of points.

    ``x`` has shape (n, N) and ``w`` shape (d, N) (or (d,) broadcast over the
    batch).  Out-of-domain entries become NaN/inf instead of raising; callers
    are expected to mask non-finite results.
    """
    with np.errstate(all="ignore"):
        return _eval_vec(e, x, w)


def _eval_vec(e: Expression, x, w):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        vec = x if e.axis == "x" else w
        return np.asarray(vec)[e.index - 1]
    if isinstance(e, Add):
        return _eval_vec(e.a, x, w) + _eval_vec(e.b, x, w)
    if isinstance(e, Sub):
        return _eval_vec(e.a, x, w) - _eval_vec(e.b, x, w)
    if isinstance(e, Mul):
        return _eval_vec(e.a, x, w) * _eval_vec(e.b, x, w)
    if isinstance(e, Div):
        return _eval_vec(e.a, x, w) / _eval_vec(e.b, x, w)
    if isinstance(e, Pow):
        base = _eval_vec(e.base, x, w)
        return np.power(base, e.exponent)
    if isinstance(e, Neg):
        return -_eval_vec(e.a, x, w)
    if isinstance(e, Call):
        arg = _eval_vec(e.a, x, w)
        fn = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "ln": np.log, "sqrt": np.sqrt}[e.fn]
        return fn(arg)
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Differentiation with neutral-element simplification
# ---------------------------------------------------------------------------

def _is_const(e, value) -> bool:
    return isinstance(e, Const) and e.value == value


def _add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


def _div(a, b):
    if _is_const(a, 0.0):
        return Const(0.0)
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def _neg(a):
    if _is_const(a, 0.0):
        return Const(0.0)
    return Neg(a)


def _pow(base, k: int):
    if k == 0:
        return Const(1.0)
    if k == 1:
        return base
    return Pow(base, k)


def differentiate(e: Expression, v: Var) -> Expression:
    """Exact symbolic partial derivative of ``e`` with respect to ``v``.

    Repeated application yields exact higher derivatives.
    """
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0) if (e.axis, e.index) == (v.axis, v.index) else Const(0.0)
    if isinstance(e, Add):
        return _add(differentiate(e.a, v), differentiate(e.b, v))
    if isinstance(e, Sub):
        return _sub(differentiate(e.a, v), differentiate(e.b, v))
    if isinstance(e, Mul):
        da, db = differentiate(e.a, v), differentiate(e.b, v)
        return _add(_mul(da, e.b), _mul(e.a, db))
    if isinstance(e, Div):
        da, db = differentiate(e.a, v), differentiate(e.b, v)
        num = _sub(_mul(da, e.b), _mul(e.a, db))
        return _div(num, _pow(e.b, 2))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return Const(0.0)
        du = differentiate(e.base, v)
        return _mul(_mul(Const(float(e.exponent)), _pow(e.base, e.exponent - 1)), du)
    if isinstance(e, Neg):
        return _neg(differentiate(e.a, v))
    if isinstance(e, Call):
        du = differentiate(e.a, v)
        if e.fn == "sin":
            return _mul(Call("cos", e.a), du)
        if e.fn == "cos":
            return _neg(_mul(Call("sin", e.a), du))
        if e.fn == "exp":
            return _mul(Call("exp", e.a), du)
        if e.fn == "ln":
            return _div(du, e.a)
        return _div(du, _mul(Const(2.0), Call("sqrt", e.a)))
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Rendering (inverse of parse up to structural identity)
# ---------------------------------------------------------------------------

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_POW = 3
_PREC_ATOM = 4


def _precedence(e: Expression) -> int:
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_MUL  # '-' factor sits at factor level
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def render(e: Expression) -> str:
    """Render the tree to text; re-parsing yields a structurally equal tree."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, (Add, Sub)):
        op = " + " if isinstance(e, Add) else " - "
        left = _wrap(e.a, _PREC_ADD, strict=False)
        right = _wrap(e.b, _PREC_ADD, strict=True)
        return f"{left}{op}{right}"
    if isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        left = _wrap(e.a, _PREC_MUL, strict=False)
        right = _wrap(e.b, _PREC_MUL, strict=True)
        return f"{left}{op}{right}"
    if isinstance(e, Neg):
        inner = render(e.a)
        if _precedence(e.a) <= _PREC_MUL and not isinstance(e.a, Neg):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Pow):
        base = render(e.base)
        if _precedence(e.base) < _PREC_ATOM:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.fn}({render(e.a)})"
    raise TypeError(f"not an expression node: {e!r}")


def _wrap(e: Expression, parent_prec: int, strict: bool) -> str:
    text = render(e)
    prec = _precedence(e)
    if prec < parent_prec or (strict and prec == parent_prec):
        return f"({text})"
    return text
