"""A small numeric expression language for defining fields on a chart.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = primary [ "^" unary ] ;          (* right associative *)
    primary = number | name | name "(" expr { "," expr } ")" | "(" expr ")" ;

``^`` binds tighter than unary minus, so ``-r^2`` is ``-(r^2)``.  Names are
chart coordinates or the constant ``pi``.  Implicit multiplication is not
accepted.  Evaluation is vectorized over numpy arrays with IEEE semantics:
``1/0`` gives ``inf`` and is left for callers to flag.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

MAX_NESTING = 100
MAX_DEPTH = 400

FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "tan": (1, np.tan),
    "exp": (1, np.exp),
    "log": (1, np.log),
    "sqrt": (1, np.sqrt),
    "sinh": (1, np.sinh),
    "cosh": (1, np.cosh),
    "atan2": (2, np.arctan2),
}
CONSTANTS = {"pi": math.pi}
RESERVED = frozenset(FUNCTIONS) | frozenset(CONSTANTS)


class ParseError(ValueError):
    """Syntax or name error; ``offset`` is a byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int, src: str = ""):
        self.message = message
        self.offset = offset
        self.src = src
        super().__init__(f"{message} at byte {offset}")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Const:
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


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op>[-+*/^(),])""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | name | op | end
    text: str
    pos: int  # character offset


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos), src)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, src: str, coords: Sequence[str]):
        self.src = src
        self.coords = {name: i for i, name in enumerate(coords)}
        self.toks = _tokenize(src)
        self.i = 0
        self.depth = 0

    def error(self, message: str, tok: _Tok) -> ParseError:
        return ParseError(message, _byte_offset(self.src, tok.pos), self.src)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.tok
        if tok.kind != "op" or tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise self.error(f"expected {text!r}, found {found}", tok)
        return self.advance()

    def enter(self, tok: _Tok) -> None:
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise self.error("expression nested too deeply", tok)

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}", self.tok)
        if _depth(node) > MAX_DEPTH:
            raise self.error("expression nested too deeply", self.toks[0])
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.tok
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            self.enter(tok)
            node = Neg(self.unary())
            self.depth -= 1
            return node
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            tok = self.advance()
            self.enter(tok)
            exponent = self.unary()
            self.depth -= 1
            return BinOp("^", base, exponent)
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(tok)
            if tok.text in self.coords:
                return Var(tok.text, self.coords[tok.text])
            if tok.text in CONSTANTS:
                return Const(tok.text)
            if tok.text in FUNCTIONS:
                raise self.error(f"function {tok.text!r} used without arguments", tok)
            raise self.error(f"unknown identifier {tok.text!r}", tok)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            self.enter(tok)
            node = self.expr()
            self.depth -= 1
            self.expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self.error(f"unexpected {found}", tok)

    def call(self, name_tok: _Tok) -> Expr:
        name = name_tok.text
        if name not in FUNCTIONS:
            raise self.error(f"unknown function {name!r}", name_tok)
        open_tok = self.expect("(")
        self.enter(open_tok)
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.depth -= 1
        self.expect(")")
        arity = FUNCTIONS[name][0]
        if len(args) != arity:
            raise self.error(f"{name} takes {arity} argument(s), got {len(args)}", name_tok)
        return Call(name, tuple(args))


def _depth(node: Expr) -> int:
    # iterative so that pathological inputs cannot exhaust the stack
    best = 0
    stack = [(node, 1)]
    while stack:
        n, d = stack.pop()
        best = max(best, d)
        if isinstance(n, Neg):
            stack.append((n.operand, d + 1))
        elif isinstance(n, BinOp):
            stack.extend([(n.left, d + 1), (n.right, d + 1)])
        elif isinstance(n, Call):
            stack.extend((a, d + 1) for a in n.args)
    return best


def parse(src: str, coords: Sequence[str]) -> Expr:
    """Parse ``src`` into an expression over the coordinate names ``coords``."""
    parser = _Parser(src, coords)
    try:
        return parser.parse()
    except RecursionError:
        raise parser.error("expression nested too deeply", parser.tok) from None


_BINOPS = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def _eval(node: Expr, x: np.ndarray):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x[..., node.index]
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return np.negative(_eval(node.operand, x))
    if isinstance(node, BinOp):
        return _BINOPS[node.op](np.float64(_eval(node.left, x)), _eval(node.right, x))
    if isinstance(node, Call):
        return FUNCTIONS[node.func][1](*(np.float64(_eval(a, x)) for a in node.args))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(e: Expr, points) -> np.ndarray | float:
    """Evaluate at one point (a coordinate tuple) or a stack of points (..., m)."""
    x = np.asarray(points, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(e, x)
        out = np.broadcast_to(np.asarray(out, dtype=float), x.shape[:-1])
    return float(out) if out.ndim == 0 else out.copy()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    if isinstance(node, Num) and (node.value < 0 or math.copysign(1.0, node.value) < 0):
        return _PREC["neg"]
    return _PREC["atom"]


def to_source(node: Expr) -> str:
    """Render an expression back to source with minimal parentheses."""
    if isinstance(node, Num):
        if not math.isfinite(node.value):
            raise ValueError(f"cannot print non-finite literal {node.value}")
        text = repr(abs(node.value))
        return f"-{text}" if math.copysign(1.0, node.value) < 0 else text
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        if _prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_source(a) for a in node.args)})"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left, right = to_source(node.left), to_source(node.right)
        if node.op == "^":
            # the base must be an atom; the exponent may be a power or a negation
            if _prec(node.left) <= p:
                left = f"({left})"
            if _prec(node.right) < _PREC["neg"]:
                right = f"({right})"
        else:
            if _prec(node.left) < p:
                left = f"({left})"
            # left-associative: equal precedence on the right needs parentheses
            if _prec(node.right) <= p:
                right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True)
class FieldDef:
    """Expressions arranged in a nested-list shape (scalar, vector, matrix or rank 3)."""

    coords: tuple
    shape: tuple
    exprs: tuple  # flat, row-major
    sources: tuple

    @classmethod
    def from_nested(cls, nested, coords: Sequence[str]) -> FieldDef:
        arr = np.array(nested, dtype=object)
        flat = []
        for i, src in enumerate(arr.reshape(-1)):
            if isinstance(src, (int, float)) and not isinstance(src, bool):
                src = repr(float(src))
            if not isinstance(src, str):
                raise ParseError(f"entry {i} is not an expression string", 0, str(src))
            try:
                flat.append(parse(src, coords))
            except ParseError as err:
                err.args = (f"entry {np.unravel_index(i, arr.shape)}: {err.args[0]}",)
                err.entry = tuple(int(j) for j in np.unravel_index(i, arr.shape))
                raise
        sources = tuple(str(s) for s in arr.reshape(-1))
        return cls(tuple(coords), arr.shape, tuple(flat), sources)

    def __call__(self, points) -> np.ndarray:
        """Evaluate on stacked points (N, m); returns shape (N, *shape)."""
        x = np.asarray(points, dtype=float)
        vals = [evaluate(e, x) for e in self.exprs]
        return np.stack(vals, axis=-1).reshape(x.shape[:-1] + self.shape)
