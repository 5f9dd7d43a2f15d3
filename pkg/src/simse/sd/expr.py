"""Expression language for stock-flow models.

Grammar (lowest precedence first)::

    expr    := sum (CMP sum)?            CMP in  <  <=  >  >=  ==  !=
    sum     := product (('+'|'-') product)*
    product := unary (('*'|'/') unary)*
    unary   := '-' unary | atom
    atom    := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Builtins: ``IF(c, a, b)``, ``MIN``, ``MAX``, ``PULSE(start, height[, width])``,
``STEP(height, start)`` and ``LATCH_TIME(cond, before)``.  ``TIME`` is the
current time and ``DT`` the step size.  Comparisons yield 1 or 0.

Expressions are compiled to Python lambdas.  ``PULSE`` and ``STEP`` read the
time at the start of the current step, so a one-step pulse integrates to
``height * width`` under every integration method.  ``LATCH_TIME`` records
the first step-start time at which its condition held and returns that time
from then on; it only updates on step boundaries.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

BUILTIN_NAMES = ("TIME", "DT")
FUNCTIONS = {"IF": (3, 3), "MIN": (1, None), "MAX": (1, None), "PULSE": (2, 3), "STEP": (2, 2),
             "LATCH_TIME": (2, 2)}


class ExpressionError(ValueError):
    def __init__(self, message: str, text: str = "", position: int = 0):
        self.text = text
        self.position = position
        super().__init__(message)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
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


Expr = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
                    r"|(?P<op><=|>=|==|!=|[-+*/(),<>]))")

_CMP = ("<", "<=", ">", ">=", "==", "!=")


def _tokens(text: str) -> list[tuple[str, str, int]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"unexpected character {text[pos:].strip()[:1]!r} in {text!r}", text, pos)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            want = f"{value!r}" if value else "a token"
            raise ExpressionError(f"expected {want} at position {tok[2]} in {self.text!r}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        if self.i != len(self.toks):
            raise ExpressionError(f"unexpected {self.peek()[1]!r} in {self.text!r}", self.text, self.peek()[2])
        return e

    def expr(self) -> Expr:
        left = self.sum()
        if self.peek()[1] in _CMP:
            op = self.take()[1]
            left = BinOp(op, left, self.sum())
        return left

    def sum(self) -> Expr:
        left = self.product()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            left = BinOp(op, left, self.product())
        return left

    def product(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.atom()

    def atom(self) -> Expr:
        kind, value, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(float(value))
        if kind == "name":
            self.take()
            if self.peek()[1] == "(":
                self.take("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take(",")
                    args.append(self.expr())
                self.take(")")
                func = value.upper()
                if func not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {value}", self.text, pos)
                lo, hi = FUNCTIONS[func]
                if len(args) < lo or (hi is not None and len(args) > hi):
                    raise ExpressionError(f"{func} takes {lo}..{hi or 'n'} arguments, got {len(args)}", self.text, pos)
                return Call(func, tuple(args))
            return Var(value)
        if value == "(":
            self.take("(")
            e = self.expr()
            self.take(")")
            return e
        raise ExpressionError(f"unexpected {value!r} at position {pos} in {self.text!r}", self.text, pos)


def parse_expr(text: Union[str, float, int, Expr]) -> Expr:
    if isinstance(text, (Num, Var, Neg, BinOp, Call)):
        return text
    if isinstance(text, (int, float)):
        return Num(float(text))
    return _Parser(text).parse()


def names(e: Expr) -> set[str]:
    """Variable names referenced by ``e`` (excluding ``TIME`` and ``DT``)."""
    if isinstance(e, Var):
        return set() if e.name in BUILTIN_NAMES else {e.name}
    if isinstance(e, Neg):
        return names(e.operand)
    if isinstance(e, BinOp):
        return names(e.left) | names(e.right)
    if isinstance(e, Call):
        out: set[str] = set()
        for a in e.args:
            out |= names(a)
        return out
    return set()


def has_latch(e: Expr) -> bool:
    if isinstance(e, Call):
        return e.func == "LATCH_TIME" or any(has_latch(a) for a in e.args)
    if isinstance(e, BinOp):
        return has_latch(e.left) or has_latch(e.right)
    if isinstance(e, Neg):
        return has_latch(e.operand)
    return False


_PREC = {"<": 1, "<=": 1, ">": 1, ">=": 1, "==": 1, "!=": 1, "+": 2, "-": 2, "*": 3, "/": 3}


def format_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def unparse(e: Expr, parent: int = 0) -> str:
    """Render ``e`` so that ``parse_expr(unparse(e)) == e``."""
    if isinstance(e, Num):
        s = format_number(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"-{unparse(e.operand, 4)}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(unparse(a) for a in e.args)})"
    prec = _PREC[e.op]
    left = unparse(e.left, prec if prec != 1 else 2)
    right = unparse(e.right, prec + 1)
    s = f"{left} {e.op} {right}"
    return f"({s})" if prec < parent else s


# -- compilation ------------------------------------------------------------

def _pulse(g: float, start: float, height: float, width: float) -> float:
    return height if start <= g < start + width else 0.0


class LatchState:
    """Per-run memory for ``LATCH_TIME`` nodes."""

    def __init__(self):
        self.values: dict[int, float] = {}
        self.update = True

    def __call__(self, key: int, g: float, cond: float, before: float) -> float:
        if key in self.values:
            return self.values[key]
        if self.update and cond:
            self.values[key] = g
            return g
        return before


def _emit(e: Expr, latch_ids: list) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        if e.name == "TIME":
            return "t"
        if e.name == "DT":
            return "dt"
        return f"v[{e.name!r}]"
    if isinstance(e, Neg):
        return f"(-{_emit(e.operand, latch_ids)})"
    if isinstance(e, BinOp):
        a, b = _emit(e.left, latch_ids), _emit(e.right, latch_ids)
        if e.op in _CMP:
            return f"(1.0 if {a} {e.op} {b} else 0.0)"
        return f"({a} {e.op} {b})"
    args = [_emit(a, latch_ids) for a in e.args]
    if e.func == "IF":
        return f"({args[1]} if {args[0]} else {args[2]})"
    if e.func == "MIN":
        return args[0] if len(args) == 1 else f"min({', '.join(args)})"
    if e.func == "MAX":
        return args[0] if len(args) == 1 else f"max({', '.join(args)})"
    if e.func == "PULSE":
        width = args[2] if len(args) == 3 else "dt"
        return f"_pulse(g, {args[0]}, {args[1]}, {width})"
    if e.func == "STEP":
        return f"({args[0]} if g >= {args[1]} else 0.0)"
    if e.func == "LATCH_TIME":
        key = len(latch_ids)
        latch_ids.append(key)
        return f"_latch({key}, g, {args[0]}, {args[1]})"
    raise ExpressionError(f"unknown function {e.func}")


def compile_expr(e: Expr, latch: LatchState, key_base: list) -> Callable:
    """Compile to ``f(v, t, g, dt)``: ``v`` maps names to values, ``t`` is the
    evaluation time, ``g`` the step-start time and ``dt`` the step size."""
    ids: list = []
    body = _emit(e, ids)
    # shift latch keys so they are unique across all expressions of a model
    offset = len(key_base)
    key_base.extend(ids)
    if ids:
        body = re.sub(r"_latch\((\d+),", lambda m: f"_latch({int(m.group(1)) + offset},", body)
    namespace = {"_pulse": _pulse, "_latch": latch, "min": min, "max": max, "math": math}
    return eval(f"lambda v, t, g, dt: {body}", namespace)  # noqa: S307 - body is generated from a parsed tree
