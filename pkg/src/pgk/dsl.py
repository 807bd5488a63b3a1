"""A small expression language for positive sequences indexed by ``n``.

Grammar (EBNF)::

    expr   = term , { ("+" | "-") , term } ;
    term   = power , { ("*" | "/") , power } ;
    power  = atom , [ "^" , power ] ;             (* right-associative *)
    atom   = number | "n" | "p"
           | ("log" | "sqrt") , "(" , expr , ")"
           | "(" , expr , ")" ;
    number = digit , { digit } , [ "." , digit , { digit } ]
           | "." , digit , { digit } ;

``n`` is the index and ``p`` the n-th prime.  ``log`` is the natural
logarithm.  Unary minus is not part of the language: every sequence the
toolkit works with is positive, and ``0 - x`` still spells a negation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from pgk.errors import (
    DomainError,
    DSLSyntaxError,
    InapplicableError,
    IndeterminateSignError,
    NonPositiveValueError,
    UnknownIdentifierError,
)
from pgk.numerics.interval import NumInterval
from pgk.numerics.vector import IntervalArray

VARIABLES = ("n", "p")
FUNCTIONS = ("log", "sqrt")

SHORTHANDS = {
    "one": "1",
    "n": "n",
    "p": "p",
    "nlogn": "n*log(n)",
}


# AST ------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Log:
    arg: "SeqExpr"


@dataclass(frozen=True)
class Sqrt:
    arg: "SeqExpr"


@dataclass(frozen=True)
class BinOp:
    left: "SeqExpr"
    right: "SeqExpr"

    symbol = "?"
    level = 0


class Add(BinOp):
    symbol, level = "+", 1


class Sub(BinOp):
    symbol, level = "-", 1


class Mul(BinOp):
    symbol, level = "*", 2


class Div(BinOp):
    symbol, level = "/", 2


class Pow(BinOp):
    symbol, level = "^", 3


SeqExpr = Union[Num, Var, Log, Sqrt, Add, Sub, Mul, Div, Pow]
_BINOPS = {cls.symbol: cls for cls in (Add, Sub, Mul, Div, Pow)}


@dataclass(frozen=True)
class EvalContext:
    n: int
    p: int | None = None


# tokenizer / parser -----------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?|\.\d+)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        found = "end of input" if tok[0] == "eof" else repr(tok[1])
        return DSLSyntaxError(f"{message}, found {found}", tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != value:
            raise self.error(f"expected {value!r}")
        return self.take()

    def parse(self):
        if self.peek()[0] == "eof":
            raise DSLSyntaxError("empty expression", 0, self.text)
        node = self.expr()
        if self.peek()[0] != "eof":
            raise self.error("unexpected trailing input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = _BINOPS[op](node, self.term())
        return node

    def term(self):
        node = self.power()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = _BINOPS[op](node, self.power())
        return node

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Pow(base, self.power())
        return base

    def atom(self):
        kind, value, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(Fraction(value))
        if kind == "name":
            self.take()
            if value in VARIABLES:
                return Var(value)
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Log(arg) if value == "log" else Sqrt(arg)
            raise UnknownIdentifierError(f"unknown identifier {value!r}", pos, self.text)
        if kind == "op" and value == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "op" and value == "-":
            raise self.error("unary minus is not supported")
        raise self.error("expected a number, variable, function or '('")


def parse(text: str) -> SeqExpr:
    """Parse ``text`` into an immutable AST."""
    return _Parser(text).parse()


def expand_shorthand(text: str) -> str:
    return SHORTHANDS.get(text.strip(), text)


def parse_sequence(text: str) -> SeqExpr:
    """Parse a CLI sequence argument, expanding named shorthands first."""
    return parse(expand_shorthand(text))


# printing ---------------------------------------------------------------


def _format_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    digits = 1
    while (value * 10**digits).denominator != 1:
        digits += 1
        if digits > 4000:
            raise ValueError(f"{value} has no finite decimal expansion")
    s = str((value * 10**digits).numerator).rjust(digits + 1, "0")
    return f"{s[:-digits]}.{s[-digits:]}"


def _level(node) -> int:
    return node.level if isinstance(node, BinOp) else 4


def to_text(node: SeqExpr) -> str:
    """Render with the minimum parentheses needed to re-parse to ``node``."""
    if isinstance(node, Num):
        return _format_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Log):
        return f"log({to_text(node.arg)})"
    if isinstance(node, Sqrt):
        return f"sqrt({to_text(node.arg)})"
    left, right = to_text(node.left), to_text(node.right)
    lvl = node.level
    if isinstance(node, Pow):
        if _level(node.left) <= lvl:
            left = f"({left})"
        if _level(node.right) < lvl:
            right = f"({right})"
    else:
        if _level(node.left) < lvl:
            left = f"({left})"
        if _level(node.right) <= lvl:
            right = f"({right})"
    return f"{left}{node.symbol}{right}"


def variables(node: SeqExpr) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, (Log, Sqrt)):
        return variables(node.arg)
    return variables(node.left) | variables(node.right)


def is_rational(node: SeqExpr) -> bool:
    """True when no log/sqrt appears (exponents are checked at evaluation)."""
    if isinstance(node, (Log, Sqrt)):
        return False
    if isinstance(node, BinOp):
        return is_rational(node.left) and is_rational(node.right)
    return True


# evaluation -------------------------------------------------------------


def _lookup(node: Var, ctx: EvalContext):
    if node.name == "n":
        return ctx.n
    if ctx.p is None:
        raise ValueError("expression uses p but the context has no prime")
    return ctx.p


def evaluate_exact(node: SeqExpr, ctx: EvalContext) -> Fraction:
    """Exact rational value; :class:`InapplicableError` if it may be irrational."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return Fraction(_lookup(node, ctx))
    if isinstance(node, (Log, Sqrt)):
        raise InapplicableError(f"{type(node).__name__.lower()} has no exact rational path")
    a = evaluate_exact(node.left, ctx)
    b = evaluate_exact(node.right, ctx)
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    if isinstance(node, Div):
        if not b:
            raise DomainError("division by zero")
        return a / b
    if b.denominator != 1:
        raise InapplicableError(f"non-integer exponent {b} has no exact rational path")
    if not a and b < 0:
        raise DomainError("zero raised to a negative power")
    return a ** int(b)


def evaluate_interval(node: SeqExpr, ctx: EvalContext, prec: int = 53) -> NumInterval:
    """Enclosure of the value without any sign requirement."""
    if isinstance(node, Num):
        return NumInterval.exact(node.value, prec)
    if isinstance(node, Var):
        return NumInterval.exact(_lookup(node, ctx), prec)
    if isinstance(node, Log):
        return evaluate_interval(node.arg, ctx, prec).log()
    if isinstance(node, Sqrt):
        return evaluate_interval(node.arg, ctx, prec).sqrt()
    a = evaluate_interval(node.left, ctx, prec)
    b = evaluate_interval(node.right, ctx, prec)
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    if isinstance(node, Div):
        return a / b
    return a.pow(b)


def check_positive(value: NumInterval, what: str = "value", n: int | None = None) -> NumInterval:
    if value.hi <= 0:
        raise NonPositiveValueError(f"{what} is not positive at n={n}: {value!r}", n=n, which=what)
    if value.lo <= 0:
        raise IndeterminateSignError(f"sign of {what} at n={n} undecided at {value.prec_bits} bits", value)
    return value


def evaluate(node: SeqExpr, ctx: EvalContext, prec: int = 53, what: str = "sequence") -> NumInterval:
    """Enclosure of a sequence term, which must be positive.

    Raises :class:`NonPositiveValueError` when the enclosure lies at or below
    zero and :class:`IndeterminateSignError` when it straddles zero (the
    caller is expected to retry at a higher precision).
    """
    return check_positive(evaluate_interval(node, ctx, prec), what, ctx.n)


def evaluate_array(node: SeqExpr, n, p=None) -> IntervalArray:
    """Binary64 enclosures of ``node`` for every (n, p) pair at once.

    Invalid rows (domain problems, overflow) come back as NaN.
    """
    n = np.asarray(n, dtype=np.int64)
    shape = n.shape
    const = None if variables(node) else evaluate_interval(node, EvalContext(1, 2))

    if isinstance(node, Num):
        return IntervalArray.const(node.value, shape)
    if isinstance(node, Var):
        if node.name == "n":
            return IntervalArray.point(n)
        if p is None:
            raise ValueError("expression uses p but no primes were supplied")
        return IntervalArray.point(p)
    if const is not None and const.is_exact:
        return IntervalArray.const(const.lo, shape)
    if isinstance(node, Log):
        return evaluate_array(node.arg, n, p).log()
    if isinstance(node, Sqrt):
        return evaluate_array(node.arg, n, p).sqrt()
    a = evaluate_array(node.left, n, p)
    if isinstance(node, Pow):
        if not variables(node.right):
            e = evaluate_interval(node.right, EvalContext(1, 2))
            if e.is_exact:
                return a.pow_rational(e.lo)
        b = evaluate_array(node.right, n, p)
        ints = b.exact & (np.floor(b.lo) == b.lo) & (np.abs(b.lo) < 2**62)
        if ints.all():
            return a.pow_int_array(b.lo.astype(np.int64))
        return a.pow(b)
    b = evaluate_array(node.right, n, p)
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    return a / b
