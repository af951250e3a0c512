"""Arithmetic expressions for a(t) and f(t, u) in configuration files.

A precedence-climbing (Pratt) parser produces an immutable tree; the
evaluator works on floats and on numpy arrays alike.

Precedence, tightest first: ``^`` (right associative), unary minus,
``*`` ``/``, ``+`` ``-`` (all left associative).  So ``-t^2`` is
``-(t^2)`` and ``2^3^2`` is ``2^(3^2)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import BvpError

VARIABLES = frozenset({"t", "u"})
CONSTANTS = {"pi": math.pi}
FUNCTIONS = {
    "sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "abs": 1,
    "min": None, "max": None,
}


class ExprError(BvpError):
    pass


class ExprSyntaxError(ExprError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownIdentifier(ExprError, ValueError):
    pass


class ForbiddenVariable(ExprError, ValueError):
    pass


class EvalError(ExprError, ArithmeticError):
    pass


class UnboundVariable(ExprError, NameError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

# (left binding power, right binding power)
_INFIX = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (41, 40)}
_PREFIX_BP = 30


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos >= len(source):
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}",
                                  _byte_offset(source, pos))
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), _byte_offset(source, m.start(kind))))
        pos = m.end()
    toks.append(_Tok("end", "", _byte_offset(source, len(source))))
    return toks


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


class _Parser:
    def __init__(self, source, allowed):
        self.toks = _tokenize(source)
        self.i = 0
        self.allowed = allowed

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.next()
        if tok.text != text:
            found = tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", tok.offset)
        return tok

    def parse(self, min_bp=0):
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _INFIX:
                break
            lbp, rbp = _INFIX[tok.text]
            if lbp < min_bp:
                break
            self.next()
            left = BinOp(tok.text, left, self.parse(rbp))
        return left

    def prefix(self):
        tok = self.next()
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"literal {tok.text} overflows", tok.offset)
            return Num(value)
        if tok.kind == "name":
            return self.name(tok)
        if tok.text == "-":
            return Neg(self.parse(_PREFIX_BP))
        if tok.text == "(":
            inner = self.parse()
            self.expect(")")
            return inner
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", tok.offset)

    def name(self, tok):
        name = tok.text
        if name in FUNCTIONS:
            self.expect("(")
            args = [self.parse()]
            while self.peek().text == ",":
                self.next()
                args.append(self.parse())
            self.expect(")")
            arity = FUNCTIONS[name]
            if arity is not None and len(args) != arity:
                raise ExprSyntaxError(
                    f"{name} takes {arity} argument(s), got {len(args)}", tok.offset)
            if arity is None and len(args) < 2:
                raise ExprSyntaxError(f"{name} takes at least 2 arguments", tok.offset)
            return Call(name, tuple(args))
        if name in CONSTANTS:
            return Const(name)
        if name in VARIABLES:
            if name not in self.allowed:
                raise ForbiddenVariable(
                    f"variable {name!r} is not allowed here (allowed: "
                    f"{', '.join(sorted(self.allowed)) or 'none'})")
            return Var(name)
        raise UnknownIdentifier(f"unknown identifier {name!r} at byte {tok.offset}")


def parse(source: str, allowed_vars=VARIABLES) -> Expr:
    """Parse ``source`` into an expression tree.

    Raises ExprSyntaxError (with ``offset``), UnknownIdentifier or
    ForbiddenVariable.  Nothing is evaluated: ``parse("1/0")`` succeeds.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(source, frozenset(allowed_vars))
    tree = p.parse()
    tok = p.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.offset)
    return tree


def variables(expr: Expr) -> frozenset:
    if isinstance(expr, Var):
        return frozenset({expr.name})
    if isinstance(expr, Neg):
        return variables(expr.operand)
    if isinstance(expr, BinOp):
        return variables(expr.left) | variables(expr.right)
    if isinstance(expr, Call):
        return frozenset().union(*(variables(a) for a in expr.args))
    return frozenset()


def to_source(expr: Expr) -> str:
    """Fully parenthesized source text; parses back to the same tree."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, (Var, Const)):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{to_source(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
    return f"{expr.func}({', '.join(to_source(a) for a in expr.args)})"


def _fail(message):
    raise EvalError(message)


def _power(base, exp):
    if np.any((base < 0) & (exp != np.floor(exp))):
        _fail("negative base with non-integer exponent")
    if np.any((base == 0) & (exp < 0)):
        _fail("division by zero (zero to a negative power)")
    return np.power(base, exp)


def _divide(num, den):
    if np.any(den == 0):
        _fail("division by zero")
    return num / den


def _log(x):
    if np.any(x <= 0):
        _fail("log of a nonpositive number")
    return np.log(x)


def _sqrt(x):
    if np.any(x < 0):
        _fail("sqrt of a negative number")
    return np.sqrt(x)


_UNARY = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": _log,
          "sqrt": _sqrt, "abs": np.abs}


def _eval(expr, env):
    if isinstance(expr, Num):
        return np.float64(expr.value)
    if isinstance(expr, Const):
        return np.float64(CONSTANTS[expr.name])
    if isinstance(expr, Var):
        value = env.get(expr.name)
        if value is None:
            raise UnboundVariable(f"variable {expr.name!r} is not bound")
        return value
    if isinstance(expr, Neg):
        return -_eval(expr.operand, env)
    if isinstance(expr, BinOp):
        a = _eval(expr.left, env)
        b = _eval(expr.right, env)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "/":
            return _divide(a, b)
        return _power(a, b)
    args = [_eval(a, env) for a in expr.args]
    if expr.func == "min":
        return np.minimum.reduce(np.broadcast_arrays(*args))
    if expr.func == "max":
        return np.maximum.reduce(np.broadcast_arrays(*args))
    return _UNARY[expr.func](args[0])


def evaluate(expr: Expr, t, u=None):
    """Evaluate at ``t`` (and ``u``); scalars give a float, arrays an array.

    Non-finite results, division by zero and domain violations raise
    EvalError.
    """
    env = {"t": None if t is None else np.asarray(t, dtype=float),
           "u": None if u is None else np.asarray(u, dtype=float)}
    with np.errstate(all="ignore"):
        out = _eval(expr, env)
    if not np.all(np.isfinite(out)):
        raise EvalError("expression evaluated to a non-finite value")
    if np.ndim(out) == 0:
        return float(out)
    return out


class Expression:
    """A parsed expression bound to its source text, callable as f(t, u)."""

    def __init__(self, source: str, allowed_vars=VARIABLES):
        self.source = source
        self.tree = parse(source, allowed_vars)

    def __call__(self, t, u=None):
        return evaluate(self.tree, t, u)

    def __repr__(self):
        return f"Expression({self.source!r})"
