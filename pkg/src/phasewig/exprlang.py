"""Tiny expression language for functions of (q, p).

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ['-'] atom ['^' int]
    atom   := number | 'q' | 'p' | func '(' expr ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'exp' | 'tanh'

``-q^2`` parses as ``-(q^2)``. Exponents are (optionally negative) integers.
Trees are immutable; :func:`to_text` prints a fully parenthesized form that
parses back to the same tree.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

VARIABLES = ("q", "p")
FUNCTIONS = ("sin", "cos", "exp", "tanh")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class DomainError(ExprError):
    def __init__(self, message: str, point: tuple[float, float] | None = None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: Expr


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow:
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: Expr


Expr = Num | Var | Neg | BinOp | Pow | Call

ZERO = Num(0.0)
ONE = Num(1.0)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tok = m.group(kind)
        if tok == "**":
            raise ExprSyntaxError("'**' is not an operator, use '^'", start)
        tokens.append((kind, tok, start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        _kind, tok, off = self.take()
        if tok != value:
            raise ExprSyntaxError(f"expected {value!r}, got {tok or 'end of input'!r}", off)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        negate = False
        if self.peek()[1] == "-":
            self.take()
            negate = True
        node = self.atom()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, tok, off = self.take()
            if kind != "num" or not tok.isdigit():
                raise ExprSyntaxError("exponent must be an integer", off)
            node = Pow(node, sign * int(tok))
        return Neg(node) if negate else node

    def atom(self) -> Expr:
        kind, tok, off = self.take()
        if kind == "num":
            return Num(float(tok))
        if kind == "name":
            if tok in VARIABLES:
                return Var(tok)
            if tok in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok, arg)
            raise UnknownIdentifierError(f"unknown identifier {tok!r}", off)
        if tok == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {tok or 'end of input'!r}", off)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""
    parser = _Parser(text)
    node = parser.expr()
    kind, tok, off = parser.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {tok!r}", off)
    return node


# ---------------------------------------------------------------- printing


def _num_text(v: float) -> str:
    text = repr(float(v))
    if text.startswith("-"):
        return f"(-{text[1:]})"
    return text


def to_text(e: Expr) -> str:
    """Fully parenthesized text; ``parse(to_text(e)) == e`` up to negative literals."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)})^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(e)


# ---------------------------------------------------------------- evaluation

_NP_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh}


def evaluate(e: Expr, q, p):
    """Evaluate with numpy broadcasting. No finiteness check."""
    if isinstance(e, Num):
        return np.full(np.broadcast(q, p).shape, e.value) if np.ndim(q) or np.ndim(p) else e.value
    if isinstance(e, Var):
        v = q if e.name == "q" else p
        return np.broadcast_to(v, np.broadcast(q, p).shape) if np.ndim(q) or np.ndim(p) else v
    if isinstance(e, Neg):
        return -evaluate(e.arg, q, p)
    if isinstance(e, BinOp):
        a = evaluate(e.left, q, p)
        b = evaluate(e.right, q, p)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return np.divide(a, b)
    if isinstance(e, Pow):
        base = np.asarray(evaluate(e.base, q, p), dtype=float)
        if e.exponent < 0:
            return np.divide(1.0, base ** (-e.exponent))
        return base**e.exponent
    if isinstance(e, Call):
        return _NP_FUNCS[e.func](evaluate(e.arg, q, p))
    raise TypeError(e)


def eval_points(e: Expr, q, p) -> np.ndarray:
    """Evaluate at arbitrary points; raises DomainError on NaN/Inf."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    with np.errstate(all="ignore"):
        out = np.asarray(evaluate(e, q, p), dtype=float)
    out = np.array(np.broadcast_to(out, np.broadcast(q, p).shape))
    bad = ~np.isfinite(out)
    if bad.any():
        idx = np.unravel_index(np.argmax(bad), bad.shape)
        qq = float(np.broadcast_to(q, out.shape)[idx])
        pp = float(np.broadcast_to(p, out.shape)[idx])
        raise DomainError(f"{to_text(e)} is not finite at q={qq!r}, p={pp!r}", (qq, pp))
    return out


def eval_on_grid(e: Expr, grid) -> np.ndarray:
    """Sample ``e`` on the (q, p) grid; returns an array of shape (n_q, n_p)."""
    q, p = grid.mesh()
    return eval_points(e, q, p)


# ---------------------------------------------------------------- folding constructors


def is_const(e: Expr) -> bool:
    return not free_vars(e)


def free_vars(e: Expr) -> set[str]:
    if isinstance(e, Num):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, (Neg, Call)):
        return free_vars(e.arg)
    if isinstance(e, Pow):
        return free_vars(e.base)
    return free_vars(e.left) | free_vars(e.right)


def _finite(x: float) -> bool:
    return bool(np.isfinite(x))


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if b == ZERO:
        return a
    if a == ZERO:
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        r = a.value / b.value
        if _finite(r):
            return Num(r)
    if b == ONE:
        return a
    if a == ZERO and isinstance(b, Num) and b.value != 0.0:
        return ZERO
    return BinOp("/", a, b)


def power(a: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Num):
        with np.errstate(all="ignore"):
            r = a.value**n if n > 0 else (1.0 / a.value ** (-n) if a.value != 0.0 else np.inf)
        if _finite(r):
            return Num(float(r))
    return Pow(a, n)


def call(name: str, a: Expr) -> Expr:
    if isinstance(a, Num):
        r = float(_NP_FUNCS[name](a.value))
        if _finite(r):
            return Num(r)
    return Call(name, a)


# ---------------------------------------------------------------- calculus


def diff(e: Expr, var: str) -> Expr:
    """Exact symbolic derivative with constant folding."""
    if var not in VARIABLES:
        raise ExprError(f"unknown variable {var!r}")
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return neg(diff(e.arg, var))
    if isinstance(e, BinOp):
        da, db = diff(e.left, var), diff(e.right, var)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, e.right), mul(e.left, db))
        if is_const(e.right):
            return div(da, e.right)
        return div(sub(mul(da, e.right), mul(e.left, db)), power(e.right, 2))
    if isinstance(e, Pow):
        du = diff(e.base, var)
        if e.exponent == 0 or du == ZERO:
            return ZERO
        return mul(mul(Num(float(e.exponent)), power(e.base, e.exponent - 1)), du)
    if isinstance(e, Call):
        du = diff(e.arg, var)
        if du == ZERO:
            return ZERO
        if e.func == "sin":
            outer = call("cos", e.arg)
        elif e.func == "cos":
            outer = neg(call("sin", e.arg))
        elif e.func == "exp":
            outer = call("exp", e.arg)
        else:
            outer = sub(ONE, power(call("tanh", e.arg), 2))
        return mul(outer, du)
    raise TypeError(e)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (no folding beyond the constructors)."""
    if isinstance(e, Num):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Neg):
        return neg(substitute(e.arg, mapping))
    if isinstance(e, BinOp):
        a, b = substitute(e.left, mapping), substitute(e.right, mapping)
        return {"+": add, "-": sub, "*": mul, "/": div}[e.op](a, b)
    if isinstance(e, Pow):
        return power(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Call):
        return call(e.func, substitute(e.arg, mapping))
    raise TypeError(e)


def as_expr(value) -> Expr:
    """Accept an Expr, text, or a number."""
    if isinstance(value, (Num, Var, Neg, BinOp, Pow, Call)):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float)):
        return Num(float(value))
    raise TypeError(f"cannot interpret {value!r} as an expression")
