"""Small expression language for the problem coefficients p(x), q(x) and seeds.

The grammar is plain infix arithmetic over complex numbers:

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' factor)?          # right-associative
    atom    := number | 'pi' | 'i' | 'x' | name '(' expr ')' | '(' expr ')'

so ``^`` binds tighter than unary minus, which binds tighter than ``*``/``/``,
which bind tighter than ``+``/``-``.  Whitespace is insignificant and
identifiers are case-sensitive lowercase.  The function catalog is fixed:
sin, cos, tan, sinh, cosh, tanh, exp, log, sqrt, abs.  Complex constants are
written with the ``i`` constant, e.g. ``1+2*i``.  ``log`` and ``sqrt`` (and
``^`` with non-integer exponents) use the principal branch.

Parsed trees are immutable and evaluation is pure, so expressions can be
shared and evaluated concurrently.
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass
from typing import Union

from .errors import EvalError, ExprSyntaxError

__all__ = ["CoeffExpr", "parse", "evaluate", "to_source", "FUNCTIONS", "CONSTANTS"]


# ------------------------------ syntax tree ---------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # 'pi' or 'i'


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "CoeffExpr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "CoeffExpr"
    right: "CoeffExpr"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "CoeffExpr"


CoeffExpr = Union[Num, Const, Var, Neg, BinOp, Call]

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": complex(cmath.pi), "i": 1j}


# -------------------------------- tokenizer ---------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


# --------------------------------- parser -----------------------------------


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def advance(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_op(self, op: str):
        kind, text, pos = self.peek()
        if kind == "op" and text == op:
            return self.advance()
        raise ExprSyntaxError(f"expected {op!r}", pos)

    def parse(self) -> CoeffExpr:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r} after expression", pos)
        return node

    def expr(self) -> CoeffExpr:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> CoeffExpr:
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.factor())
            else:
                return node

    def factor(self) -> CoeffExpr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> CoeffExpr:
        node = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            # right-associative; the exponent may itself carry a unary minus
            return BinOp("^", node, self.factor())
        return node

    def atom(self) -> CoeffExpr:
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect_op("(")
                args = [self.expr()]
                while True:
                    k2, t2, p2 = self.peek()
                    if k2 == "op" and t2 == ",":
                        self.advance()
                        args.append(self.expr())
                    else:
                        break
                self.expect_op(")")
                if len(args) != 1:
                    raise ExprSyntaxError(
                        f"{text} takes exactly one argument, got {len(args)}", pos
                    )
                return Call(text, args[0])
            if text in CONSTANTS:
                return Const(text)
            if text == "x":
                return Var()
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {text!r}", pos)


def parse(source: str) -> CoeffExpr:
    """Parse ``source`` into an immutable expression tree."""
    return _Parser(source).parse()


# ------------------------------- evaluation ---------------------------------

_CMATH_FN = {
    "sin": cmath.sin,
    "cos": cmath.cos,
    "tan": cmath.tan,
    "sinh": cmath.sinh,
    "cosh": cmath.cosh,
    "tanh": cmath.tanh,
    "exp": cmath.exp,
    "log": cmath.log,
    "sqrt": cmath.sqrt,
    "abs": lambda z: complex(abs(z)),
}


def _pow(base: complex, exponent: complex) -> complex:
    # Integer exponents are exact; everything else goes through the
    # principal logarithm, one documented branch.
    if exponent.imag == 0.0 and float(exponent.real).is_integer():
        n = int(exponent.real)
        if base == 0 and n < 0:
            raise EvalError("zero raised to a negative power")
        return base**n
    if base == 0:
        if exponent.real > 0:
            return 0j
        raise EvalError("zero base with non-positive exponent")
    return cmath.exp(exponent * cmath.log(base))


def evaluate(expr: CoeffExpr, x: float) -> complex:
    """Evaluate ``expr`` at the real point ``x`` with complex arithmetic.

    Raises :class:`EvalError` on division by zero, ``log(0)``, or any
    non-finite intermediate/final value.
    """
    value = _eval(expr, x)
    if not (cmath.isfinite(value)):
        raise EvalError(f"non-finite result at x={x}")
    return value


def _eval(expr: CoeffExpr, x: float) -> complex:
    if isinstance(expr, Num):
        return complex(expr.value)
    if isinstance(expr, Const):
        return CONSTANTS[expr.name]
    if isinstance(expr, Var):
        return complex(x)
    if isinstance(expr, Neg):
        return -_eval(expr.arg, x)
    if isinstance(expr, BinOp):
        left = _eval(expr.left, x)
        right = _eval(expr.right, x)
        try:
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            if expr.op == "/":
                if right == 0:
                    raise EvalError(f"division by zero at x={x}")
                return left / right
            return _pow(left, right)
        except OverflowError as exc:
            raise EvalError(f"overflow at x={x}") from exc
    if isinstance(expr, Call):
        arg = _eval(expr.arg, x)
        if expr.name == "log" and arg == 0:
            raise EvalError(f"log of zero at x={x}")
        try:
            return _CMATH_FN[expr.name](arg)
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"{expr.name} failed at x={x}: {exc}") from exc
    raise TypeError(f"not an expression node: {expr!r}")


# ----------------------------- pretty printing ------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 9


def _prec(node: CoeffExpr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def to_source(expr: CoeffExpr) -> str:
    """Render a tree back to source; reparsing yields a structurally identical tree."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Const):
        return expr.name
    if isinstance(expr, Var):
        return "x"
    if isinstance(expr, Neg):
        inner = to_source(expr.arg)
        if _prec(expr.arg) < _NEG_PREC:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, Call):
        return f"{expr.name}({to_source(expr.arg)})"
    if isinstance(expr, BinOp):
        op = expr.op
        prec = _PREC[op]
        left = to_source(expr.left)
        right = to_source(expr.right)
        # '^' is right-associative, the rest left-associative; parenthesize the
        # side that would otherwise re-associate, including equal-precedence
        # right children so the round trip is structure-preserving.
        if _prec(expr.left) < prec or (_prec(expr.left) == prec and op == "^"):
            left = f"({left})"
        if _prec(expr.right) < prec or (_prec(expr.right) == prec and op != "^"):
            right = f"({right})"
        if op in "+-":
            return f"{left} {op} {right}"
        return f"{left}{op}{right}"
    raise TypeError(f"not an expression node: {expr!r}")
