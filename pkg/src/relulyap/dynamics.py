"""Vector fields f(x): builtin benchmark systems and parsed expressions.

Expressions are small trees over constants, variables x1..xp, unary
negation, the binaries + - * / ^ (integer exponents only) and the
functions sin, cos, exp, tanh.  Precedence, tightest first:

    ^   >   unary -   >   * /   >   + -

with all binaries left-associative, so "-x1^3" means -(x1^3) and
"x1^2^3" means (x1^2)^3.  Jacobians are obtained by symbolic
differentiation at construction time; evaluation is vectorized over
point batches.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArityError,
    DimensionError,
    EvalError,
    ExpressionSyntaxError,
    ParseError,
    UnknownBuiltin,
    UnknownVariable,
)

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
}


# --- expression trees -------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float

    def eval(self, x):
        return self.value

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, matching the x1..xp naming

    def eval(self, x):
        return x[..., self.index - 1]

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Neg:
    arg: object

    def eval(self, x):
        return -self.arg.eval(x)

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: object
    right: object

    def eval(self, x):
        a = self.left.eval(x)
        b = self.right.eval(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.true_divide(a, b)

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int

    def eval(self, x):
        # Keep the exponent an int: negative bases stay exact and
        # float-exponent domain errors cannot occur.
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.power(self.base.eval(x), self.exponent)

    def __str__(self):
        return f"({self.base}^{self.exponent})"


@dataclass(frozen=True)
class Func:
    name: str
    arg: object

    def eval(self, x):
        return FUNCTIONS[self.name](self.arg.eval(x))

    def __str__(self):
        return f"{self.name}({self.arg})"


# --- tokenizer + recursive-descent parser -----------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"bad token at {text[pos:pos + 10]!r}")
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name")))
        else:
            tokens.append(("op", m.group("op")))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens, dim):
        self.tokens = tokens
        self.dim = dim
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ExpressionSyntaxError(f"expected {op!r}, found {val!r}")

    def parse(self):
        tree = self.expr()
        if self.pos != len(self.tokens):
            raise ExpressionSyntaxError(f"trailing input {self.peek()[1]!r}")
        return tree

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek() == ("op", "^"):
            self.take()
            node = Pow(node, self.exponent())
        return node

    def exponent(self):
        # Integer exponents only; an optional sign is allowed right after ^.
        sign = 1
        if self.peek() == ("op", "-"):
            self.take()
            sign = -1
        kind, val = self.take()
        if kind != "num":
            raise ExpressionSyntaxError(f"exponent must be an integer, found {val!r}")
        num = float(val)
        if num != int(num):
            raise ExpressionSyntaxError(f"exponent must be an integer, found {val!r}")
        return sign * int(num)

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Func(val, arg)
            m = re.fullmatch(r"x([1-9]\d*)", val)
            if m is None:
                raise UnknownVariable(f"unknown identifier {val!r} (variables are x1..x{self.dim})")
            idx = int(m.group(1))
            if idx > self.dim:
                raise UnknownVariable(f"variable {val} out of range for dimension {self.dim}")
            return Var(idx)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(f"unexpected token {val!r}")


def parse_expression(text: str, dim: int):
    """Parse a single scalar expression over x1..x<dim> into a tree."""
    tokens = _tokenize(text)
    if not tokens:
        raise ExpressionSyntaxError("empty expression")
    return _Parser(tokens, dim).parse()


# --- symbolic differentiation -----------------------------------------

def _is_const(tree, value=None):
    return isinstance(tree, Const) and (value is None or tree.value == value)


def _add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(a, 0.0):
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return BinOp("*", a, b)


def differentiate(tree, index: int):
    """d(tree)/d x_index as a new tree, lightly constant-folded."""
    if isinstance(tree, Const):
        return Const(0.0)
    if isinstance(tree, Var):
        return Const(1.0 if tree.index == index else 0.0)
    if isinstance(tree, Neg):
        inner = differentiate(tree.arg, index)
        return Const(0.0) if _is_const(inner, 0.0) else Neg(inner)
    if isinstance(tree, BinOp):
        da = differentiate(tree.left, index)
        db = differentiate(tree.right, index)
        if tree.op == "+":
            return _add(da, db)
        if tree.op == "-":
            return _sub(da, db)
        if tree.op == "*":
            return _add(_mul(da, tree.right), _mul(tree.left, db))
        # quotient rule: (da*b - a*db) / b^2
        num = _sub(_mul(da, tree.right), _mul(tree.left, db))
        if _is_const(num, 0.0):
            return Const(0.0)
        return BinOp("/", num, Pow(tree.right, 2))
    if isinstance(tree, Pow):
        k = tree.exponent
        if k == 0:
            return Const(0.0)
        du = differentiate(tree.base, index)
        if _is_const(du, 0.0):
            return Const(0.0)
        inner = tree.base if k == 2 else Pow(tree.base, k - 1)
        if k == 1:
            return du
        return _mul(Const(float(k)), _mul(inner, du))
    if isinstance(tree, Func):
        du = differentiate(tree.arg, index)
        if _is_const(du, 0.0):
            return Const(0.0)
        if tree.name == "sin":
            outer = Func("cos", tree.arg)
        elif tree.name == "cos":
            outer = Neg(Func("sin", tree.arg))
        elif tree.name == "exp":
            outer = Func("exp", tree.arg)
        else:  # tanh' = 1 - tanh^2
            outer = _sub(Const(1.0), Pow(Func("tanh", tree.arg), 2))
        return _mul(outer, du)
    raise TypeError(f"unknown node {tree!r}")


# --- dynamics model ----------------------------------------------------

class DynamicsModel:
    """Evaluatable vector field with analytic Jacobian.

    Immutable after construction: the Jacobian trees are derived up
    front, so concurrent evaluation needs no locking.
    """

    def __init__(self, dim: int, components, source: str = "<expr>"):
        if len(components) != dim:
            raise ArityError(f"{len(components)} components for dimension {dim}")
        self.dim = dim
        self.components = tuple(components)
        self.source = source
        self._jac = tuple(
            tuple(differentiate(comp, j + 1) for j in range(dim))
            for comp in self.components
        )

    def __repr__(self):
        eqs = ", ".join(str(c) for c in self.components)
        return f"DynamicsModel(dim={self.dim}, [{eqs}])"


def parse_dynamics(text, p: int) -> DynamicsModel:
    """Build a model from p component expressions.

    `text` may be a list/tuple of expression strings or a single string
    with one expression per line.
    """
    if isinstance(text, str):
        exprs = [line.strip() for line in text.splitlines() if line.strip()]
    else:
        exprs = [str(e) for e in text]
    # Parse before the arity check so syntax and variable-range errors
    # in the expressions themselves surface first.
    comps = [parse_expression(e, p) for e in exprs]
    if len(comps) != p:
        raise ArityError(f"expected {p} component expressions, got {len(comps)}")
    return DynamicsModel(p, comps)


def load_dynamics(path) -> DynamicsModel:
    """Load a dynamics file: JSON with fields dim and equations."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed dynamics file {path}: {exc}") from exc
    if not isinstance(raw, dict) or "dim" not in raw or "equations" not in raw:
        raise ParseError(f"dynamics file {path} needs fields 'dim' and 'equations'")
    model = parse_dynamics(raw["equations"], int(raw["dim"]))
    model.source = str(path)
    return model


BUILTIN_NAMES = ("neg_cubic", "bilinear_osc", "coupled_bilinear")


def builtin(name: str, p: int) -> DynamicsModel:
    """Benchmark systems: neg_cubic (any p), bilinear_osc (p=2),
    coupled_bilinear (p=4, coupling 0.1).  All have an equilibrium at 0.
    """
    if name == "neg_cubic":
        if p < 1:
            raise DimensionError("neg_cubic needs p >= 1")
        exprs = [f"-x{i}^3" for i in range(1, p + 1)]
    elif name == "bilinear_osc":
        if p != 2:
            raise DimensionError("bilinear_osc is 2-dimensional")
        exprs = ["-x1 + x1*x2", "-x2 - x1^2"]
    elif name == "coupled_bilinear":
        if p != 4:
            raise DimensionError("coupled_bilinear is 4-dimensional")
        exprs = [
            "-x1 + x1*x2",
            "-x2 - x1^2 + 0.1*x3",
            "-x3 + x3*x4",
            "-x4 - x3^2 + 0.1*x1",
        ]
    else:
        raise UnknownBuiltin(f"no builtin dynamics named {name!r}")
    model = parse_dynamics(exprs, p)
    model.source = f"builtin:{name}"
    return model


def _check_x(model: DynamicsModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.dim:
        raise DimensionError(f"point dimension {x.shape[-1]} != model dim {model.dim}")
    return x


def eval_f(model: DynamicsModel, x) -> np.ndarray:
    """f(x).  For a point (p,) returns (p,); for a batch (N, p) returns (N, p)."""
    x = _check_x(model, x)
    cols = []
    with np.errstate(all="ignore"):
        for comp in model.components:
            val = np.asarray(comp.eval(x), dtype=float)
            val = np.broadcast_to(val, x.shape[:-1])
            if not np.all(np.isfinite(val)):
                raise EvalError(f"singularity evaluating {comp}")
            cols.append(val)
    return np.stack(cols, axis=-1)


def jacobian(model: DynamicsModel, x) -> np.ndarray:
    """Analytic Jacobian J[i, j] = d f_i / d x_j at a single point."""
    x = _check_x(model, x)
    if x.ndim != 1:
        raise DimensionError("jacobian expects a single point")
    J = np.empty((model.dim, model.dim))
    with np.errstate(all="ignore"):
        for i, row in enumerate(model._jac):
            for j, tree in enumerate(row):
                val = float(np.asarray(tree.eval(x)))
                if not math.isfinite(val):
                    raise EvalError(f"singularity in jacobian entry ({i}, {j})")
                J[i, j] = val
    return J
