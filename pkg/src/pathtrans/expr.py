"""Small expression language for scalar functions of chart coordinates.

Supports parsing, complex evaluation (scalar or numpy-vectorized), exact
symbolic partial differentiation, and pretty-printing.

Grammar (whitespace insignificant)::

    expr     := term  (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := "-" unary | power
    power    := atom ("^" exponent)*            exponent := ["-"] INTEGER
    atom     := NUMBER | "i" | "pi" | NAME
              | NAME "(" expr ("," expr)* ")"
              | "(" expr ")"

Precedence is ``^`` > unary minus > ``* /`` > ``+ -``; binary operators of
equal precedence associate to the left.  Exponents are restricted to integer
literals so that differentiation never leaves the grammar.  All values are
complex; the known functions are sin, cos, exp, ln, sqrt and atan2 (the last
requires real arguments).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Union

import numpy as np

from .errors import ExpressionSyntaxError, SingularityError, ValidationError

__all__ = [
    "Expression",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "parse",
    "evaluate",
    "evaluate_scalar",
    "differentiate",
    "simplify",
    "substitute",
    "to_text",
    "free_variables",
]

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "ln": 1, "sqrt": 1, "atan2": 2}
RESERVED = {"i", "pi"} | set(FUNCTIONS)


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expression", ...]


Expression = Union[Num, Var, Neg, BinOp, Pow, Call]

ZERO = Num(complex(0.0))
ONE = Num(complex(1.0))


# --------------------------------------------------------------------------
# Tokenizer / parser
# --------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind: str, text: str, pos: int):
        self.kind = kind  # NUM, NAME, OP, END
        self.text = text
        self.pos = pos  # 1-based character position


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    idx = 0
    n = len(text)
    while idx < n:
        ch = text[idx]
        if ch.isspace():
            idx += 1
            continue
        if ch in "+-*/^(),":
            tokens.append(_Token("OP", ch, idx + 1))
            idx += 1
            continue
        m = _NUMBER_RE.match(text, idx)
        if m:
            tokens.append(_Token("NUM", m.group(0), idx + 1))
            idx = m.end()
            continue
        m = _NAME_RE.match(text, idx)
        if m:
            tokens.append(_Token("NAME", m.group(0), idx + 1))
            idx = m.end()
            continue
        raise ExpressionSyntaxError(f"unexpected character {ch!r}", idx + 1)
    tokens.append(_Token("END", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        if self.cur.kind == "OP" and self.cur.text == op:
            self.advance()
            return
        raise ExpressionSyntaxError(f"expected {op!r}", self.cur.pos)

    def parse(self) -> Expression:
        e = self.expr()
        if self.cur.kind != "END":
            raise ExpressionSyntaxError(f"unexpected {self.cur.text!r}", self.cur.pos)
        return e

    def expr(self) -> Expression:
        node = self.term()
        while self.cur.kind == "OP" and self.cur.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.cur.kind == "OP" and self.cur.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.cur.kind == "OP" and self.cur.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        node = self.atom()
        while self.cur.kind == "OP" and self.cur.text == "^":
            self.advance()
            node = Pow(node, self.exponent())
        return node

    def exponent(self) -> int:
        sign = 1
        if self.cur.kind == "OP" and self.cur.text == "-":
            self.advance()
            sign = -1
        tok = self.cur
        if tok.kind != "NUM":
            raise ExpressionSyntaxError("exponent must be an integer literal", tok.pos)
        if not tok.text.isdigit():
            raise ExpressionSyntaxError(f"exponent must be an integer literal, got {tok.text!r}", tok.pos)
        self.advance()
        return sign * int(tok.text)

    def atom(self) -> Expression:
        tok = self.cur
        if tok.kind == "NUM":
            self.advance()
            return Num(complex(float(tok.text)))
        if tok.kind == "NAME":
            self.advance()
            name = tok.text
            if self.cur.kind == "OP" and self.cur.text == "(":
                if name not in FUNCTIONS:
                    raise ExpressionSyntaxError(f"unknown function {name!r}", tok.pos)
                self.advance()
                args = [self.expr()]
                while self.cur.kind == "OP" and self.cur.text == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect_op(")")
                if len(args) != FUNCTIONS[name]:
                    raise ExpressionSyntaxError(
                        f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}", tok.pos)
                return Call(name, tuple(args))
            if name == "i":
                return Num(1j)
            if name == "pi":
                return Num(complex(math.pi))
            if name in FUNCTIONS:
                raise ExpressionSyntaxError(f"expected '(' after function name {name!r}", self.cur.pos)
            return Var(name)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(
            "expected a value" if tok.kind == "END" else f"unexpected {tok.text!r}", tok.pos)


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises ExpressionSyntaxError with a 1-based character position on
    malformed input, unknown function names, or non-integer exponents.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("empty expression", 1)
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------

def _as_complex(v):
    if isinstance(v, np.ndarray):
        return v if v.dtype == np.complex128 else v.astype(np.complex128)
    return complex(v)


def evaluate(e: Expression, bindings: Mapping[str, object]):
    """Evaluate ``e`` with variables bound to complex scalars or numpy arrays.

    Array bindings broadcast element-wise and yield complex arrays.  Division
    by zero, ln(0), 0^(negative) and complex atan2 arguments raise.
    """
    match e:
        case Num(value):
            return value
        case Var(name):
            try:
                return _as_complex(bindings[name])
            except KeyError:
                raise ValidationError(f"unbound variable {name!r}") from None
        case Neg(arg):
            return -evaluate(arg, bindings)
        case BinOp("+", l, r):
            return evaluate(l, bindings) + evaluate(r, bindings)
        case BinOp("-", l, r):
            return evaluate(l, bindings) - evaluate(r, bindings)
        case BinOp("*", l, r):
            return evaluate(l, bindings) * evaluate(r, bindings)
        case BinOp("/", l, r):
            den = evaluate(r, bindings)
            if np.any(den == 0):
                raise SingularityError("division by zero")
            return evaluate(l, bindings) / den
        case Pow(base, n):
            b = evaluate(base, bindings)
            if n < 0 and np.any(b == 0):
                raise SingularityError("zero raised to a negative power")
            return b ** n
        case Call("sin", (a,)):
            return np.sin(_as_complex(evaluate(a, bindings)))
        case Call("cos", (a,)):
            return np.cos(_as_complex(evaluate(a, bindings)))
        case Call("exp", (a,)):
            return np.exp(_as_complex(evaluate(a, bindings)))
        case Call("ln", (a,)):
            v = evaluate(a, bindings)
            if np.any(v == 0):
                raise SingularityError("ln(0)")
            return np.log(_as_complex(v))
        case Call("sqrt", (a,)):
            return np.sqrt(_as_complex(evaluate(a, bindings)))
        case Call("atan2", (a, b)):
            y = evaluate(a, bindings)
            x = evaluate(b, bindings)
            if np.any(np.imag(y) != 0) or np.any(np.imag(x) != 0):
                raise ValidationError("atan2 requires real arguments")
            return _as_complex(np.arctan2(np.real(y), np.real(x)))
    raise TypeError(f"not an expression node: {e!r}")


def evaluate_scalar(e: Expression, bindings: Mapping[str, object]) -> complex:
    return complex(evaluate(e, bindings))


def free_variables(e: Expression) -> set[str]:
    match e:
        case Num(_):
            return set()
        case Var(name):
            return {name}
        case Neg(arg):
            return free_variables(arg)
        case BinOp(_, l, r):
            return free_variables(l) | free_variables(r)
        case Pow(base, _):
            return free_variables(base)
        case Call(_, args):
            out: set[str] = set()
            for a in args:
                out |= free_variables(a)
            return out
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# Differentiation and simplification
# --------------------------------------------------------------------------

def _is_num(e: Expression, value=None) -> bool:
    return isinstance(e, Num) and (value is None or e.value == value)


def simplify(e: Expression) -> Expression:
    """Constant folding and 0/1 elimination; nothing fancier."""
    match e:
        case Num(_) | Var(_):
            return e
        case Neg(arg):
            a = simplify(arg)
            if isinstance(a, Num):
                return Num(-a.value)
            if isinstance(a, Neg):
                return a.arg
            return Neg(a)
        case BinOp(op, left, right):
            l = simplify(left)
            r = simplify(right)
            if isinstance(l, Num) and isinstance(r, Num):
                if op == "+":
                    return Num(l.value + r.value)
                if op == "-":
                    return Num(l.value - r.value)
                if op == "*":
                    return Num(l.value * r.value)
                if op == "/" and r.value != 0:
                    return Num(l.value / r.value)
            if op == "+":
                if _is_num(l, 0):
                    return r
                if _is_num(r, 0):
                    return l
            elif op == "-":
                if _is_num(r, 0):
                    return l
                if _is_num(l, 0):
                    return simplify(Neg(r))
            elif op == "*":
                if _is_num(l, 0) or _is_num(r, 0):
                    return ZERO
                if _is_num(l, 1):
                    return r
                if _is_num(r, 1):
                    return l
            elif op == "/":
                if _is_num(l, 0):
                    return ZERO
                if _is_num(r, 1):
                    return l
            return BinOp(op, l, r)
        case Pow(base, n):
            b = simplify(base)
            if n == 0:
                return ONE
            if n == 1:
                return b
            if isinstance(b, Num) and not (b.value == 0 and n < 0):
                return Num(b.value ** n)
            return Pow(b, n)
        case Call(func, args):
            return Call(func, tuple(simplify(a) for a in args))
    raise TypeError(f"not an expression node: {e!r}")


def _mul(a: Expression, b: Expression) -> Expression:
    return BinOp("*", a, b)


def _add(a: Expression, b: Expression) -> Expression:
    return BinOp("+", a, b)


def _sub(a: Expression, b: Expression) -> Expression:
    return BinOp("-", a, b)


def _diff(e: Expression, var: str) -> Expression:
    match e:
        case Num(_):
            return ZERO
        case Var(name):
            return ONE if name == var else ZERO
        case Neg(arg):
            return Neg(_diff(arg, var))
        case BinOp("+", l, r):
            return _add(_diff(l, var), _diff(r, var))
        case BinOp("-", l, r):
            return _sub(_diff(l, var), _diff(r, var))
        case BinOp("*", l, r):
            return _add(_mul(_diff(l, var), r), _mul(l, _diff(r, var)))
        case BinOp("/", l, r):
            num = _sub(_mul(_diff(l, var), r), _mul(l, _diff(r, var)))
            return BinOp("/", num, Pow(r, 2))
        case Pow(base, n):
            inner = _diff(base, var)
            return _mul(Num(complex(n)), _mul(Pow(base, n - 1), inner))
        case Call("sin", (a,)):
            return _mul(Call("cos", (a,)), _diff(a, var))
        case Call("cos", (a,)):
            return _mul(Neg(Call("sin", (a,))), _diff(a, var))
        case Call("exp", (a,)):
            return _mul(Call("exp", (a,)), _diff(a, var))
        case Call("ln", (a,)):
            return BinOp("/", _diff(a, var), a)
        case Call("sqrt", (a,)):
            return BinOp("/", _diff(a, var), _mul(Num(complex(2.0)), Call("sqrt", (a,))))
        case Call("atan2", (y, x)):
            num = _sub(_mul(x, _diff(y, var)), _mul(y, _diff(x, var)))
            den = _add(Pow(x, 2), Pow(y, 2))
            return BinOp("/", num, den)
    raise TypeError(f"not an expression node: {e!r}")


@lru_cache(maxsize=None)
def differentiate(e: Expression, var: str) -> Expression:
    """Exact symbolic partial derivative of ``e`` with respect to ``var``."""
    return simplify(_diff(e, var))


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    match e:
        case Num(_):
            return e
        case Var(name):
            return mapping.get(name, e)
        case Neg(arg):
            return Neg(substitute(arg, mapping))
        case BinOp(op, l, r):
            return BinOp(op, substitute(l, mapping), substitute(r, mapping))
        case Pow(base, n):
            return Pow(substitute(base, mapping), n)
        case Call(func, args):
            return Call(func, tuple(substitute(a, mapping) for a in args))
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# Pretty printer
# --------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _num_text(v: complex) -> tuple[str, int]:
    re_, im = v.real, v.imag
    if im == 0:
        txt = _fmt_real(re_)
        return txt, (_PREC_NEG if re_ < 0 else _PREC_ATOM)
    if re_ == 0:
        if im == 1:
            return "i", _PREC_ATOM
        if im == -1:
            return "-i", _PREC_NEG
        return f"{_fmt_real(im)}*i", (_PREC_NEG if im < 0 else _PREC_MUL)
    sign = "+" if im > 0 else "-"
    return f"({_fmt_real(re_)} {sign} {_fmt_real(abs(im))}*i)", _PREC_ATOM


def _pp(e: Expression, ctx: int) -> str:
    match e:
        case Num(value):
            txt, prec = _num_text(value)
        case Var(name):
            txt, prec = name, _PREC_ATOM
        case Neg(arg):
            txt, prec = "-" + _pp(arg, _PREC_NEG), _PREC_NEG
        case BinOp(op, l, r):
            prec = _PREC_ADD if op in "+-" else _PREC_MUL
            txt = f"{_pp(l, prec)} {op} {_pp(r, prec + 1)}"
        case Pow(base, n):
            txt, prec = f"{_pp(base, _PREC_ATOM)}^{n}", _PREC_POW
        case Call(func, args):
            txt, prec = f"{func}({', '.join(_pp(a, 0) for a in args)})", _PREC_ATOM
        case _:
            raise TypeError(f"not an expression node: {e!r}")
    return f"({txt})" if prec < ctx else txt


def to_text(e: Expression) -> str:
    """Render an expression; ``parse(to_text(.))`` is stable after one round."""
    return _pp(e, 0)
