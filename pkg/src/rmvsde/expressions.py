"""Arithmetic expression language for model coefficients and costs.

Drift, diffusion and cost functions are user-definable over the variables
(t, x, m1, m2, a), where m1/m2 are the first and second moments of the
current empirical law. Which variables are legal depends on the slot: the
diffusion and the reflection/terminal costs are uncontrolled, so `a` is
rejected for them at parse time.

Grammar (whitespace-insensitive):

    expr    :=  term (('+' | '-') term)*          left associative
    term    :=  factor (('*' | '/') factor)*      left associative
    factor  :=  '-' factor | power
    power   :=  atom ('^' factor)?                right associative
    atom    :=  NUMBER | VAR | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

'^' binds tighter than unary minus: "-x^2" is -(x^2). Functions: sin, cos,
exp, sqrt, abs, tanh (one argument), min, max (two arguments).

Evaluation is numpy-vectorised and raises NumericalBlowup (never silently
propagates NaN) on division by zero, sqrt of a negative number, or a power
with no real value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ExpressionSyntaxError,
    NumericalBlowup,
    UnknownFunction,
    UnknownVariable,
)

__all__ = [
    "Expr", "Num", "Var", "Unary", "Binary", "Call",
    "parse", "evaluate", "unparse", "variables",
    "DRIFT_VARS", "DIFFUSION_VARS", "RUNNING_COST_VARS",
    "REFLECTION_COST_VARS", "TERMINAL_COST_VARS",
]

DRIFT_VARS = frozenset({"t", "x", "m1", "m2", "a"})
DIFFUSION_VARS = frozenset({"t", "x", "m1", "m2"})
RUNNING_COST_VARS = frozenset({"t", "x", "m1", "m2", "a"})
REFLECTION_COST_VARS = frozenset({"t", "x", "m1", "m2"})
TERMINAL_COST_VARS = frozenset({"x", "m1", "m2"})

_UNARY_FUNCS = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs, "tanh": np.tanh,
}
_BINARY_FUNCS = {"min": np.minimum, "max": np.maximum}
_FUNCTIONS = frozenset(_UNARY_FUNCS) | frozenset(_BINARY_FUNCS) | {"sqrt"}

_MAX_DEPTH = 64


class Expr:
    """Base class of expression AST nodes."""


@dataclass(frozen=True)
class Num(Expr):
    value: float
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Var(Expr):
    name: str
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: tuple
    span: tuple = field(default=(0, 0), compare=False)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(source) - len(stripped)
            raise ExpressionSyntaxError(
                f"unexpected character {source[bad_at]!r} at position {bad_at}",
                position=bad_at,
            )
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, allowed_vars):
        self.source = source
        self.tokens = _tokenize(source)
        self.allowed = frozenset(allowed_vars)
        self.idx = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.idx]

    def advance(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def fail(self, expected):
        kind, text, pos = self.peek()
        got = "end of input" if kind == "end" else repr(text)
        raise ExpressionSyntaxError(
            f"expected {expected} at position {pos}, got {got}", position=pos
        )

    def enter(self):
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            raise ExpressionSyntaxError(
                f"expression nested deeper than {_MAX_DEPTH} levels",
                position=self.peek()[2],
            )

    def leave(self):
        self.depth -= 1

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("end of expression")
        return node

    def expr(self):
        self.enter()
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            _, op, pos = self.advance()
            rhs = self.term()
            node = Binary(op, node, rhs, span=(node.span[0], rhs.span[1]))
        self.leave()
        return node

    def term(self):
        self.enter()
        node = self.factor()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            _, op, pos = self.advance()
            rhs = self.factor()
            node = Binary(op, node, rhs, span=(node.span[0], rhs.span[1]))
        self.leave()
        return node

    def factor(self):
        self.enter()
        if self.peek()[:2] == ("op", "-"):
            _, _, pos = self.advance()
            operand = self.factor()
            node = Unary("-", operand, span=(pos, operand.span[1]))
        else:
            node = self.power()
        self.leave()
        return node

    def power(self):
        self.enter()
        node = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            rhs = self.factor()
            node = Binary("^", node, rhs, span=(node.span[0], rhs.span[1]))
        self.leave()
        return node

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(text), span=(pos, pos + len(text)))
        if kind == "ident":
            self.advance()
            if self.peek()[:2] == ("op", "("):
                return self.call(text, pos)
            if text in _FUNCTIONS:
                self.fail(f"'(' after function {text!r}")
            if text not in self.allowed:
                raise UnknownVariable(
                    f"variable {text!r} at position {pos} is not allowed here "
                    f"(allowed: {', '.join(sorted(self.allowed))})",
                    position=pos,
                )
            return Var(text, span=(pos, pos + len(text)))
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.fail("')'")
            self.advance()
            return node
        self.fail("a number, variable, function call or '('")

    def call(self, name, pos):
        if name not in _FUNCTIONS:
            raise UnknownFunction(
                f"unknown function {name!r} at position {pos}", position=pos
            )
        self.advance()  # consumes '('
        args = [self.expr()]
        while self.peek()[:2] == ("op", ","):
            self.advance()
            args.append(self.expr())
        if self.peek()[:2] != ("op", ")"):
            self.fail("',' or ')'")
        _, _, endpos = self.advance()
        arity = 2 if name in _BINARY_FUNCS else 1
        if len(args) != arity:
            raise ExpressionSyntaxError(
                f"function {name!r} takes {arity} argument(s), got {len(args)}",
                position=pos,
            )
        return Call(name, tuple(args), span=(pos, endpos + 1))


def parse(source: str, allowed_vars) -> Expr:
    """Parse an expression, rejecting variables outside `allowed_vars`."""
    if not source or not source.strip():
        raise ExpressionSyntaxError("empty expression", position=0)
    return _Parser(source, allowed_vars).parse()


def variables(expr: Expr) -> set:
    """All variable names referenced by the expression."""
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Unary):
        return variables(expr.operand)
    if isinstance(expr, Binary):
        return variables(expr.lhs) | variables(expr.rhs)
    if isinstance(expr, Call):
        out = set()
        for arg in expr.args:
            out |= variables(arg)
        return out
    return set()


def _blowup(node, reason):
    raise NumericalBlowup(
        f"{reason} in subexpression '{unparse(node)}'", where=unparse(node)
    )


def evaluate(expr: Expr, bindings: dict):
    """Evaluate against scalar or numpy-array bindings.

    Scalars and arrays broadcast; the result has the broadcast shape.
    """
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        try:
            return bindings[expr.name]
        except KeyError:
            raise UnknownVariable(f"no binding for variable {expr.name!r}") from None
    if isinstance(expr, Unary):
        return -evaluate(expr.operand, bindings)
    if isinstance(expr, Binary):
        lhs = evaluate(expr.lhs, bindings)
        rhs = evaluate(expr.rhs, bindings)
        if expr.op == "+":
            return lhs + rhs
        if expr.op == "-":
            return lhs - rhs
        if expr.op == "*":
            return lhs * rhs
        if expr.op == "/":
            if np.any(rhs == 0.0):
                _blowup(expr, "division by zero")
            return lhs / rhs
        # '^'
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            out = np.power(lhs, rhs)
        if np.any(np.isnan(out)) and not (np.any(np.isnan(lhs)) or np.any(np.isnan(rhs))):
            _blowup(expr, "power has no real value")
        if np.any(np.isinf(out)) and np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs)):
            if np.any((lhs == 0.0) & (np.asarray(rhs) < 0.0)):
                _blowup(expr, "zero raised to a negative power")
        return out
    if isinstance(expr, Call):
        args = [evaluate(arg, bindings) for arg in expr.args]
        if expr.func == "sqrt":
            if np.any(np.asarray(args[0]) < 0.0):
                _blowup(expr, "square root of a negative number")
            return np.sqrt(args[0])
        if expr.func in _UNARY_FUNCS:
            return _UNARY_FUNCS[expr.func](args[0])
        return _BINARY_FUNCS[expr.func](args[0], args[1])
    raise TypeError(f"not an expression node: {expr!r}")


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "unary": 3, "^": 4, "atom": 5}


def _prec(node) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary):
        return _PREC["unary"]
    return _PREC["atom"]


def unparse(expr: Expr) -> str:
    """Render with the minimal parentheses that preserve tree structure."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        inner = unparse(expr.operand)
        if _prec(expr.operand) <= _PREC["unary"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, Binary):
        lhs, rhs = unparse(expr.lhs), unparse(expr.rhs)
        p = _PREC[expr.op]
        if expr.op == "^":
            # right associative, tighter than unary minus on the left
            if _prec(expr.lhs) <= p:
                lhs = f"({lhs})"
            if _prec(expr.rhs) < _PREC["unary"]:
                rhs = f"({rhs})"
        else:
            if _prec(expr.lhs) < p:
                lhs = f"({lhs})"
            if _prec(expr.rhs) <= p:
                rhs = f"({rhs})"
        return f"{lhs} {expr.op} {rhs}" if expr.op in "+-" else f"{lhs}{expr.op}{rhs}"
    if isinstance(expr, Call):
        return f"{expr.func}({', '.join(unparse(a) for a in expr.args)})"
    raise TypeError(f"not an expression node: {expr!r}")
