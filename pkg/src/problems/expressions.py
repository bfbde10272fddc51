"""
Expression Grammar
Parses and evaluates the small arithmetic language used for drifts and
terminal conditions: + - * / ^, cos, sin, exp, numeric constants, t and x
"""
import math
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from utils.errors import ProblemError

# ===================== TOKEN PATTERNS =====================
TOKEN_PATTERN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*/^()]))"
)

FUNCTIONS = {
    "cos": math.cos,
    "sin": math.sin,
    "exp": math.exp,
}

ARRAY_FUNCTIONS = {
    "cos": np.cos,
    "sin": np.sin,
    "exp": np.exp,
}

VARIABLES = ("t", "x")

CONSTANTS = {
    "pi": math.pi,
    "e": math.e,
}


@dataclass(frozen=True)
class Node:
    """Expression tree node: kind is num, var, neg, add, sub, mul, div, pow or call"""
    kind: str
    value: float = 0.0
    name: str = ""
    args: Tuple["Node", ...] = ()


def _tokenize(text):
    tokens = []
    position = 0
    stripped = text.rstrip()
    while position < len(stripped):
        match = TOKEN_PATTERN.match(stripped, position)
        if match is None or match.end() == position:
            raise ProblemError(f"unexpected character {stripped[position]!r} in expression {text!r}")
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
        position = match.end()
    return tokens


class _Parser:
    """Recursive descent: sum -> product -> unary -> power -> atom"""

    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.position = 0

    def peek(self):
        return self.tokens[self.position] if self.position < len(self.tokens) else (None, None)

    def take(self, expected=None):
        kind, token = self.peek()
        if kind is None:
            raise ProblemError(f"unexpected end of expression {self.text!r}")
        if expected is not None and token != expected:
            raise ProblemError(f"expected {expected!r} but found {token!r} in {self.text!r}")
        self.position += 1
        return kind, token

    def parse(self):
        if not self.tokens:
            raise ProblemError("empty expression")
        node = self.sum()
        if self.position != len(self.tokens):
            raise ProblemError(f"trailing input {self.peek()[1]!r} in expression {self.text!r}")
        return node

    def sum(self):
        node = self.product()
        while self.peek()[1] in ("+", "-"):
            _, op = self.take()
            node = Node("add" if op == "+" else "sub", args=(node, self.product()))
        return node

    def product(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op = self.take()
            node = Node("mul" if op == "*" else "div", args=(node, self.unary()))
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Node("neg", args=(self.unary(),))
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            # right associative, binds tighter than unary minus on the left
            return Node("pow", args=(base, self.unary()))
        return base

    def atom(self):
        kind, token = self.take()
        if kind == "number":
            return Node("num", value=float(token))
        if kind == "name":
            if token in FUNCTIONS:
                self.take("(")
                argument = self.sum()
                self.take(")")
                return Node("call", name=token, args=(argument,))
            if token in VARIABLES:
                return Node("var", name=token)
            if token in CONSTANTS:
                return Node("num", value=CONSTANTS[token])
            raise ProblemError(f"unknown name {token!r} in expression {self.text!r}")
        if token == "(":
            node = self.sum()
            self.take(")")
            return node
        raise ProblemError(f"unexpected token {token!r} in expression {self.text!r}")


def _evaluate(node, t, x, functions=FUNCTIONS):
    kind = node.kind
    if kind == "num":
        return node.value
    if kind == "var":
        return t if node.name == "t" else x
    if kind == "neg":
        return -_evaluate(node.args[0], t, x, functions)
    if kind == "call":
        return functions[node.name](_evaluate(node.args[0], t, x, functions))
    left = _evaluate(node.args[0], t, x, functions)
    right = _evaluate(node.args[1], t, x, functions)
    if kind == "add":
        return left + right
    if kind == "sub":
        return left - right
    if kind == "mul":
        return left * right
    if kind == "div":
        return left / right
    return left ** right


def _variables(node):
    if node.kind == "var":
        return {node.name}
    names = set()
    for child in node.args:
        names |= _variables(child)
    return names


@dataclass(frozen=True)
class Expression:
    """Parsed expression in t and x; callable as expr(t, x)"""
    source: str
    tree: Node

    @classmethod
    def parse(cls, source: str) -> "Expression":
        return cls(source.strip(), _Parser(source).parse())

    def __call__(self, t: float, x: float) -> float:
        try:
            return float(_evaluate(self.tree, t, x))
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise ProblemError(f"cannot evaluate {self.source!r} at t={t}, x={x}: {exc}") from exc

    def evaluate_array(self, t, x) -> np.ndarray:
        """Elementwise value over arrays t and x broadcast together; non-finite entries are left in place"""
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        with np.errstate(all="ignore"):
            value = _evaluate(self.tree, t, x, ARRAY_FUNCTIONS)
        return np.array(np.broadcast_to(np.asarray(value, dtype=float), t.shape))

    @property
    def variables(self):
        return frozenset(_variables(self.tree))

    @property
    def is_constant(self):
        return not self.variables

    def of_x(self):
        """Single-argument view g(x) for terminal conditions"""
        return TerminalFunction(self)

    def __str__(self):
        return self.source


@dataclass(frozen=True)
class TerminalFunction:
    """Expression evaluated at t = 0 as a function of x alone"""
    expression: Expression

    def __call__(self, x: float) -> float:
        return self.expression(0.0, x)

    def evaluate_array(self, x) -> np.ndarray:
        return self.expression.evaluate_array(0.0, x)


def match_cosine(expression: Expression) -> Optional[Tuple[float, float]]:
    """
    (A, phi) when the expression is A*cos(x + phi) with no t dependence.

    Accepts an optional constant factor on either side and a cosine argument
    that is affine in x with slope +-1.
    """
    if "t" in expression.variables:
        return None
    node = expression.tree
    amplitude = 1.0
    if node.kind == "neg":
        amplitude, node = -1.0, node.args[0]
    if node.kind == "mul":
        left, right = node.args
        if not _variables(left) and right.kind == "call":
            amplitude *= _evaluate(left, 0.0, 0.0)
            node = right
        elif not _variables(right) and left.kind == "call":
            amplitude *= _evaluate(right, 0.0, 0.0)
            node = left
    if node.kind != "call" or node.name != "cos":
        return None
    inner = node.args[0]
    at0, at1, at2 = (_evaluate(inner, 0.0, x) for x in (0.0, 1.0, 2.0))
    slope = at1 - at0
    if abs(abs(slope) - 1.0) > 1e-12 or abs((at2 - at1) - slope) > 1e-12:
        return None
    # cos(-x + c) = cos(x - c)
    phase = at0 if slope > 0 else -at0
    return amplitude, phase
