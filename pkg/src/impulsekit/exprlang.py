"""A small arithmetic expression language over state and input variables.

Grammar (whitespace insensitive)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | atom
    atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"

``NUMBER`` is a decimal literal with optional exponent.  Identifiers are the
state variables ``x1, x2, ...``, the input variables ``u1, u2, ...`` and the
function names ``abs, sign, exp, ln, sqrt, pow, min, max, sin, cos``.  All
arithmetic is IEEE-754 double precision; ``sign(0) = 0``; domain errors
(``ln`` of a non-positive value, division by zero, ...) raise
:class:`~impulsekit.errors.DomainError` instead of yielding NaN.

Expressions parse to an immutable syntax tree, compile once to a flat postfix
program and are evaluated by the active kernel backend (compiled or pure
Python, see :mod:`impulsekit._kernels`).
"""

import re
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DomainError, ParseError

__all__ = [
    "Expr",
    "VectorExpr",
    "parse",
    "parse_scalar",
    "parse_vector",
    "eval",
    "eval_many",
    "grad_fd",
    "pretty_print",
]

FUNCTIONS = {
    "abs": 1,
    "sign": 1,
    "exp": 1,
    "ln": 1,
    "sqrt": 1,
    "pow": 2,
    "min": 2,
    "max": 2,
    "sin": 1,
    "cos": 1,
}

_FUNC_OPCODE = {
    "abs": K.OP_ABS,
    "sign": K.OP_SIGN,
    "exp": K.OP_EXP,
    "ln": K.OP_LN,
    "sqrt": K.OP_SQRT,
    "pow": K.OP_POW,
    "min": K.OP_MIN,
    "max": K.OP_MAX,
    "sin": K.OP_SIN,
    "cos": K.OP_COS,
}

_BINOP_OPCODE = {"+": K.OP_ADD, "-": K.OP_SUB, "*": K.OP_MUL, "/": K.OP_DIV}


# ---------------------------------------------------------------------------
# Syntax tree


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "u"
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/(),])
  | (?P<ws>\s+)
    """,
    re.VERBOSE,
)

_VAR_RE = re.compile(r"^([xu])([1-9][0-9]*)$")


def _tokenize(text):
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(
                "unexpected character %r" % text[pos], line, pos - line_start + 1
            )
        kind = match.lastgroup
        value = match.group()
        if kind != "ws":
            tokens.append((kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = match.end()
    tokens.append(("end", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text, n, m, scalar_symbol):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.n = n
        self.m = m
        self.scalar_symbol = scalar_symbol

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok[2], tok[3])

    def expect_op(self, op):
        kind, value, _, _ = self.peek()
        if kind != "op" or value != op:
            self.error("expected %r" % op)
        return self.advance()

    def parse(self):
        kind, _, _, _ = self.peek()
        if kind == "end":
            self.error("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            self.error("unexpected token %r" % self.peek()[1])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        kind, value, _, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.factor())
        return self.atom()

    def atom(self):
        kind, value, line, col = self.peek()
        if kind == "number":
            self.advance()
            num = float(value)
            if not np.isfinite(num):
                raise ParseError("numeric literal overflows", line, col)
            return Num(num)
        if kind == "ident":
            self.advance()
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                return self.call(value, line, col)
            return self.variable(value, line, col)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        self.error("unexpected token %r" % (value or "end of input"))

    def call(self, name, line, col):
        if name not in FUNCTIONS:
            raise ParseError("unknown function %r" % name, line, col)
        self.expect_op("(")
        args = [self.expr()]
        while self.peek()[0] == "op" and self.peek()[1] == ",":
            self.advance()
            args.append(self.expr())
        self.expect_op(")")
        arity = FUNCTIONS[name]
        if len(args) != arity:
            raise ParseError(
                "%s expects %d argument%s, got %d"
                % (name, arity, "s" if arity != 1 else "", len(args)),
                line,
                col,
            )
        return Call(name, tuple(args))

    def variable(self, name, line, col):
        if self.scalar_symbol is not None:
            if name == self.scalar_symbol:
                return Var("x", 1)
            raise ParseError(
                "unknown identifier %r (only %r is available here)"
                % (name, self.scalar_symbol),
                line,
                col,
            )
        match = _VAR_RE.match(name)
        if match is None:
            raise ParseError("unknown identifier %r" % name, line, col)
        kind, index = match.group(1), int(match.group(2))
        limit = self.n if kind == "x" else self.m
        if index > limit:
            raise ParseError(
                "%s%d exceeds the declared dimension (%d)" % (kind, index, limit),
                line,
                col,
            )
        return Var(kind, index)


# ---------------------------------------------------------------------------
# Compilation to the postfix program executed by the kernels


@dataclass(frozen=True)
class Program:
    code: np.ndarray
    operand: np.ndarray
    stack_need: int


def _compile(root):
    code = []
    operand = []
    depth = 0
    max_depth = 0

    def push(op, val=0.0):
        nonlocal depth, max_depth
        code.append(op)
        operand.append(val)
        depth += 1
        max_depth = max(max_depth, depth)

    def emit(op, pops):
        nonlocal depth
        code.append(op)
        operand.append(0.0)
        depth -= pops - 1

    def walk(node):
        if isinstance(node, Num):
            push(K.OP_CONST, node.value)
        elif isinstance(node, Var):
            op = K.OP_LOADX if node.kind == "x" else K.OP_LOADU
            push(op, float(node.index - 1))
        elif isinstance(node, Neg):
            walk(node.operand)
            emit(K.OP_NEG, 1)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
            emit(_BINOP_OPCODE[node.op], 2)
        elif isinstance(node, Call):
            for arg in node.args:
                walk(arg)
            emit(_FUNC_OPCODE[node.func], FUNCTIONS[node.func])
        else:
            raise TypeError("not a syntax tree node: %r" % (node,))

    walk(root)
    return Program(
        np.ascontiguousarray(code, dtype=np.int32),
        np.ascontiguousarray(operand, dtype=np.float64),
        max_depth,
    )


# ---------------------------------------------------------------------------
# Pretty printing

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_ATOM = 3


def _pp(node, symbol):
    if isinstance(node, Num):
        return repr(node.value), _PREC_ATOM
    if isinstance(node, Var):
        if symbol is not None:
            return symbol, _PREC_ATOM
        return "%s%d" % (node.kind, node.index), _PREC_ATOM
    if isinstance(node, Neg):
        inner, prec = _pp(node.operand, symbol)
        if prec < _PREC_ATOM:
            inner = "(" + inner + ")"
        return "-" + inner, _PREC_ATOM
    if isinstance(node, BinOp):
        prec = _PREC_ADD if node.op in ("+", "-") else _PREC_MUL
        left, lp = _pp(node.left, symbol)
        right, rp = _pp(node.right, symbol)
        if lp < prec:
            left = "(" + left + ")"
        if rp <= prec:
            right = "(" + right + ")"
        return left + node.op + right, prec
    if isinstance(node, Call):
        args = ", ".join(_pp(arg, symbol)[0] for arg in node.args)
        return "%s(%s)" % (node.func, args), _PREC_ATOM
    raise TypeError("not a syntax tree node: %r" % (node,))


# ---------------------------------------------------------------------------
# Public wrapper types


class Expr:
    """An immutable parsed expression over n state and m input variables."""

    __slots__ = ("root", "n", "m", "scalar_symbol", "_program")

    def __init__(self, root, n, m, scalar_symbol=None):
        self.root = root
        self.n = n
        self.m = m
        self.scalar_symbol = scalar_symbol
        self._program = None

    @property
    def program(self):
        if self._program is None:
            self._program = _compile(self.root)
        return self._program

    def pretty(self):
        return _pp(self.root, self.scalar_symbol)[0]

    def __repr__(self):
        return "Expr(%r)" % self.pretty()

    def __eq__(self, other):
        return isinstance(other, Expr) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def eval(self, x, u=()):
        xa = _as_vector(x, self.n, "x")
        ua = _as_vector(u, self.m, "u")
        prog = self.program
        value, err, errval = K.eval_one(
            prog.code, prog.operand, prog.stack_need, xa, ua
        )
        if err != K.ERR_NONE:
            raise DomainError(
                "%s while evaluating %r (operand %r)"
                % (K.ERR_MESSAGES[err], self.pretty(), errval)
            )
        return value

    def eval_many(self, X, U=None):
        """Batch evaluation over rows; returns (values, error codes)."""
        Xa = np.ascontiguousarray(X, dtype=np.float64)
        if Xa.ndim != 2 or Xa.shape[1] != self.n:
            raise ValueError("X must have shape (rows, %d)" % self.n)
        if U is None:
            Ua = np.zeros((Xa.shape[0], self.m))
        else:
            Ua = np.ascontiguousarray(U, dtype=np.float64)
        if Ua.shape != (Xa.shape[0], self.m):
            raise ValueError("U must have shape (rows, %d)" % self.m)
        prog = self.program
        return K.eval_many(prog.code, prog.operand, prog.stack_need, Xa, Ua)

    def grad_fd(self, x, u=()):
        xa = _as_vector(x, self.n, "x")
        ua = _as_vector(u, self.m, "u")
        out = np.empty(self.n)
        for j in range(self.n):
            h = 1e-6 * (1.0 + abs(xa[j]))
            xp = xa.copy()
            xm = xa.copy()
            xp[j] += h
            xm[j] -= h
            out[j] = (self.eval(xp, ua) - self.eval(xm, ua)) / (2.0 * h)
        return out


class VectorExpr:
    """A tuple of expressions sharing the same variable space."""

    __slots__ = ("components", "n", "m", "_packed")

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("a vector expression needs at least one component")
        n, m = components[0].n, components[0].m
        for comp in components:
            if comp.n != n or comp.m != m:
                raise ValueError("components disagree on variable dimensions")
        self.components = components
        self.n = n
        self.m = m
        self._packed = None

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def pretty(self):
        return [comp.pretty() for comp in self.components]

    def eval(self, x, u=()):
        return np.array([comp.eval(x, u) for comp in self.components])

    def packed(self):
        """Concatenated programs + offsets, as consumed by the RK4 kernel."""
        if self._packed is None:
            progs = [comp.program for comp in self.components]
            code = np.ascontiguousarray(
                np.concatenate([p.code for p in progs]), dtype=np.int32
            )
            operand = np.ascontiguousarray(
                np.concatenate([p.operand for p in progs]), dtype=np.float64
            )
            offsets = np.zeros(len(progs) + 1, dtype=np.int32)
            for i, p in enumerate(progs):
                offsets[i + 1] = offsets[i] + len(p.code)
            stack_need = max(p.stack_need for p in progs)
            self._packed = (code, operand, offsets, stack_need)
        return self._packed


def _as_vector(values, expected, name):
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape != (expected,):
        raise ValueError(
            "%s has length %d, expected %d" % (name, arr.size, expected)
        )
    return arr


# ---------------------------------------------------------------------------
# Module-level operations


def parse(text, n, m=0):
    """Parse an expression over x1..xn and u1..um."""
    if n < 0 or m < 0:
        raise ValueError("dimensions must be nonnegative")
    root = _Parser(text, n, m, None).parse()
    return Expr(root, n, m)


def parse_scalar(text, symbol):
    """Parse a single-variable expression, e.g. a gain over ``r``."""
    root = _Parser(text, 1, 0, symbol).parse()
    return Expr(root, 1, 0, scalar_symbol=symbol)


def parse_vector(texts, n, m=0):
    return VectorExpr([parse(t, n, m) for t in texts])


def eval(e, x, u=()):  # noqa: A001 - mirrors the operation name
    """Evaluate ``e`` at (x, u); raises DomainError on arithmetic faults."""
    return e.eval(x, u)


def eval_many(e, X, U=None):
    return e.eval_many(X, U)


def grad_fd(e, x, u=()):
    """Central-difference gradient of ``e`` with respect to x."""
    return e.grad_fd(x, u)


def pretty_print(e):
    return e.pretty()


# ---------------------------------------------------------------------------
# Tree rewriting helpers used by the interconnection and composition code


def remap(e, new_n, new_m, x_offset=0, u_offset=0):
    """Shift variable indices, e.g. to embed a subsystem expression into the
    composed variable space."""

    def walk(node):
        if isinstance(node, Var):
            if node.kind == "x":
                return Var("x", node.index + x_offset)
            return Var("u", node.index + u_offset)
        if isinstance(node, Neg):
            return Neg(walk(node.operand))
        if isinstance(node, BinOp):
            return BinOp(node.op, walk(node.left), walk(node.right))
        if isinstance(node, Call):
            return Call(node.func, tuple(walk(a) for a in node.args))
        return node

    root = walk(e.root)
    _check_dims(root, new_n, new_m)
    return Expr(root, new_n, new_m)


def substitute_states(e, replacements, new_n, new_m):
    """Replace each state variable ``xi`` by the i-th expression root in
    ``replacements`` (a dict index -> node).  Input variables pass through."""

    def walk(node):
        if isinstance(node, Var):
            if node.kind == "x":
                return replacements[node.index]
            return node
        if isinstance(node, Neg):
            return Neg(walk(node.operand))
        if isinstance(node, BinOp):
            return BinOp(node.op, walk(node.left), walk(node.right))
        if isinstance(node, Call):
            return Call(node.func, tuple(walk(a) for a in node.args))
        return node

    root = walk(e.root)
    _check_dims(root, new_n, new_m)
    return Expr(root, new_n, new_m)


def _check_dims(root, n, m):
    def walk(node):
        if isinstance(node, Var):
            limit = n if node.kind == "x" else m
            if node.index > limit:
                raise ValueError(
                    "variable %s%d exceeds dimension %d" % (node.kind, node.index, limit)
                )
        elif isinstance(node, Neg):
            walk(node.operand)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Call):
            for a in node.args:
                walk(a)

    walk(root)


def kink_arguments(e):
    """Subexpressions whose zero set is a kink locus of ``e``.

    Central differences are unreliable across the kinks of abs/sign/min/max
    (and at the origin of sqrt); certification grids exclude points where any
    returned expression is within the exclusion radius of zero.
    """
    found = []

    def walk(node):
        if isinstance(node, Call):
            if node.func in ("abs", "sign", "sqrt"):
                found.append(node.args[0])
            elif node.func in ("min", "max"):
                found.append(BinOp("-", node.args[0], node.args[1]))
            for a in node.args:
                walk(a)
        elif isinstance(node, Neg):
            walk(node.operand)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)

    walk(e.root)
    return [Expr(root, e.n, e.m) for root in found]
