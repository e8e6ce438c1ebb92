"""A small arithmetic language for entering data functions as text.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-2^2`` is ``-4`` and ``2^-1`` is
``0.5``.  Evaluation works elementwise on numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InputError

VARIABLES = frozenset({"x", "t", "s"})
CONSTANTS = frozenset({"pi", "tau", "l", "T"})
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


class ExprError(InputError):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} at offset {offset}")
        self.offset = offset


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifier(ExprError):
    pass


class UnboundVariable(ExprError):
    pass


class DomainError(ExprError, ArithmeticError):
    pass


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
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
    arg: "Expr"


Expr = Num | Name | Neg | BinOp | Call


# --- lexer -----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(src: str):
    pos = 0
    out = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, val, pos = self.take()
        if val != text:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
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
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in VARIABLES or val in CONSTANTS:
                return Name(val)
            raise UnknownIdentifier(f"unknown identifier {val!r}", pos)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def parse(src: str) -> Expr:
    """Parse ``src``; errors carry the character offset of the problem."""
    return _Parser(src).parse()


# --- evaluation ------------------------------------------------------------

def _pow(base, expo):
    base = np.asarray(base, dtype=float)
    expo = np.asarray(expo, dtype=float)
    bad = (base < 0) & (expo != np.round(expo))
    if np.any(bad):
        raise DomainError("negative base raised to a non-integer power")
    if np.any((base == 0) & (expo < 0)):
        raise DomainError("zero raised to a negative power")
    with np.errstate(over="ignore"):
        return np.power(base, expo)


def eval_expr(e: Expr, bindings: dict[str, object]):
    """Evaluate ``e``; ``pi`` is always bound, everything else must be supplied."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        if e.name == "pi":
            return bindings.get("pi", math.pi)
        try:
            return bindings[e.name]
        except KeyError:
            raise UnboundVariable(f"variable {e.name!r} is not bound") from None
    if isinstance(e, Neg):
        return -np.asarray(eval_expr(e.operand, bindings))
    if isinstance(e, Call):
        arg = np.asarray(eval_expr(e.arg, bindings), dtype=float)
        if e.func == "sqrt" and np.any(arg < 0):
            raise DomainError("square root of a negative number")
        with np.errstate(over="ignore"):
            return FUNCTIONS[e.func](arg)
    a = np.asarray(eval_expr(e.left, bindings), dtype=float)
    b = np.asarray(eval_expr(e.right, bindings), dtype=float)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if np.any(b == 0):
            raise DomainError("division by zero")
        return a / b
    if e.op == "^":
        return _pow(a, b)
    raise ValueError(f"unknown operator {e.op!r}")


def free_names(e: Expr) -> set[str]:
    if isinstance(e, Name):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, Neg):
        return free_names(e.operand)
    if isinstance(e, Call):
        return free_names(e.arg)
    return free_names(e.left) | free_names(e.right)


# --- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Num) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return _PREC["neg"]
    return _PREC["atom"]


def _wrap(e: Expr, need: int) -> str:
    text = to_source(e)
    return f"({text})" if _prec(e) < need else text


def to_source(e: Expr) -> str:
    """Shortest-parenthesis text that parses back to an equivalent tree."""
    if isinstance(e, Num):
        return repr(float(e.value)) if e.value >= 0 and math.copysign(1.0, e.value) > 0 \
            else f"-{repr(-float(e.value))}"
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    if isinstance(e, Neg):
        return f"-{_wrap(e.operand, _PREC['neg'])}"
    p = _PREC[e.op]
    if e.op == "^":
        # left operand must be atomic; the right side may be a unary chain
        return f"{_wrap(e.left, _PREC['atom'])}^{_wrap(e.right, _PREC['neg'])}"
    left = _wrap(e.left, p)
    right = _wrap(e.right, p + 1)
    return f"{left} {e.op} {right}"


def to_source_parenthesized(e: Expr) -> str:
    """Every compound sub-expression in its own parentheses."""
    if isinstance(e, Num):
        return repr(float(e.value)) if e.value >= 0 else f"(-{repr(-float(e.value))})"
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_source_parenthesized(e.arg)})"
    if isinstance(e, Neg):
        return f"(-{to_source_parenthesized(e.operand)})"
    return f"({to_source_parenthesized(e.left)} {e.op} {to_source_parenthesized(e.right)})"


# --- data functions --------------------------------------------------------

class Function:
    """Parsed expression bound to problem constants, called as ``f(x, t)``.

    ``s`` is an alias of the time argument so history expressions may use it.
    """

    def __init__(self, src: str, constants: dict[str, float] | None = None,
                 allowed: frozenset[str] = VARIABLES):
        self.src = src
        self.expr = parse(src)
        self.constants = dict(constants or {})
        unknown = {n for n in free_names(self.expr)
                   if n not in allowed and n not in CONSTANTS}
        if unknown:
            raise UnknownIdentifier(f"{src!r} uses {sorted(unknown)} which is not allowed here")
        for n in free_names(self.expr) & CONSTANTS:
            if n != "pi" and n not in self.constants:
                raise UnboundVariable(f"constant {n!r} used in {src!r} has no value")

    def _shape(self, *args):
        return np.broadcast_shapes(*(np.shape(a) for a in args))

    def __call__(self, x=0.0, t=0.0):
        env = dict(self.constants)
        env.update(x=x, t=t, s=t)
        out = np.asarray(eval_expr(self.expr, env), dtype=float)
        return np.broadcast_to(out, self._shape(x, t, out)).copy()

    def __repr__(self):
        return f"Function({self.src!r})"


def space_function(src: str, constants=None):
    """``g(x)`` from text; only ``x`` may appear as a variable."""
    f = Function(src, constants, allowed=frozenset({"x"}))
    return lambda x: f(x, 0.0)


def time_function(src: str, constants=None):
    """``g(t)`` from text; ``t`` and ``s`` may appear."""
    f = Function(src, constants, allowed=frozenset({"t", "s"}))
    return lambda t: f(0.0, t)


def space_time_function(src: str, constants=None):
    return Function(src, constants)
