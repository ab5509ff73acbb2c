"""Field definitions: a small expression language evaluated through jets.

Grammar::

    field  := (ident "=" expr (";" | newline))+
    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := ("-" | "+") factor | base ("^" ["-"] integer)?
    base   := number | ident | "(" expr ")" | func "(" expr ("," expr)? ")"
    func   := sqrt | sin | cos | exp | log | atan2

Base coordinates are ``x1..xn`` and fibre coordinates ``y1..yn``; for
``n <= 3`` the names ``x, y, z`` and ``u, v, w`` are accepted as well.
``#`` starts a comment.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from . import jets
from .errors import ArityError, DimensionMismatch, DomainError, ParseError

EPS_FIBRE = 1e-6

KINDS = ("spray", "scalar", "covector", "sym2tensor", "twoform")


# -- points ---------------------------------------------------------------


@dataclass(frozen=True)
class Point:
    """A point (x, y) of the slit tangent bundle in a single chart."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise DimensionMismatch(f"base and fibre dimensions differ: {x.shape} vs {y.shape}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if np.linalg.norm(y) < EPS_FIBRE:
            raise DomainError(f"fibre vector {y} is inside the zero section guard |y| < {EPS_FIBRE}")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_z(cls, z) -> "Point":
        z = np.asarray(z, dtype=float)
        n = len(z) // 2
        return cls(z[:n], z[n:])

    def scaled(self, s: float) -> "Point":
        return Point(self.x, s * self.y)

    def __repr__(self):
        return f"Point(x={self.x.tolist()}, y={self.y.tolist()})"


# -- expression trees -----------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # canonical: x1..xn, y1..yn


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True, eq=False)
class Native:
    """A component computed by Python code from the variable list (not printable)."""

    name: str
    fn: Callable


Expr = Union[Num, Var, Neg, BinOp, Pow, Call, Native]

ZERO = Num(0.0)
ONE = Num(1.0)

_FUNCS = {"sqrt": 1, "sin": 1, "cos": 1, "exp": 1, "log": 1, "atan2": 2}
_ALIASES = {1: ("x", "u"), 2: ("xy", "uv"), 3: ("xyz", "uvw")}


def variable_names(n: int) -> dict[str, str]:
    """Map every accepted spelling to its canonical variable name."""
    names = {f"x{i + 1}": f"x{i + 1}" for i in range(n)}
    names.update({f"y{i + 1}": f"y{i + 1}" for i in range(n)})
    if n in _ALIASES:
        base, fibre = _ALIASES[n]
        for i in range(n):
            names[base[i]] = f"x{i + 1}"
            names[fibre[i]] = f"y{i + 1}"
    return names


def variable_index(name: str, n: int) -> int:
    canon = variable_names(n)[name]
    k = int(canon[1:]) - 1
    return k if canon[0] == "x" else n + k


# -- tokenizer and parser -------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)"
    r"|(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),=;])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    out = []
    line, line_start, pos = 1, 0, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, src: str, n: int):
        self.toks = _tokenize(src)
        self.i = 0
        self.names = variable_names(n)

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def take(self, kind=None, text=None):
        tok = self.tok
        if (kind and tok.kind != kind) or (text and tok.text != text):
            want = text or kind
            self.error(f"expected {want!r}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def at(self, text):
        return self.tok.kind == "op" and self.tok.text == text

    def statements(self):
        stmts = []
        while self.tok.kind != "eof":
            lhs = self.take("ident")
            self.take("op", "=")
            rhs = self.expr()
            prev = self.toks[self.i - 1]
            if self.at(";"):
                self.i += 1
            elif self.tok.kind != "eof" and self.tok.line == prev.line:
                self.error(f"expected ';' or end of line, found {self.tok.text!r}")
            stmts.append((lhs, rhs))
        if not stmts:
            self.error("empty field definition")
        return stmts

    def expr(self):
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.at("*") or self.at("/"):
            op = self.take().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.at("-"):
            self.i += 1
            return Neg(self.factor())
        if self.at("+"):
            self.i += 1
            return self.factor()
        node = self.base()
        if self.at("^"):
            self.i += 1
            sign = 1
            if self.at("-"):
                self.i += 1
                sign = -1
            tok = self.take("num")
            if not re.fullmatch(r"\d+", tok.text):
                self.error("exponent must be an integer", tok)
            node = Pow(node, sign * int(tok.text))
        return node

    def base(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if tok.text in _FUNCS:
                self.take("op", "(")
                args = [self.expr()]
                if self.at(","):
                    self.i += 1
                    args.append(self.expr())
                self.take("op", ")")
                if len(args) != _FUNCS[tok.text]:
                    self.error(f"{tok.text} takes {_FUNCS[tok.text]} argument(s)", tok)
                return Call(tok.text, tuple(args))
            if tok.text not in self.names:
                self.error(f"unknown identifier {tok.text!r}", tok)
            return Var(self.names[tok.text])
        if self.at("("):
            self.i += 1
            node = self.expr()
            self.take("op", ")")
            return node
        self.error(f"unexpected {tok.text or 'end of input'!r}")


def parse_expr(text: str, n: int) -> Expr:
    p = _Parser(text, n)
    node = p.expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return node


# -- printing -------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_text(node: Expr, prec: int = 0) -> str:
    """Render an expression; ``parse_expr(to_text(e))`` rebuilds ``e``."""
    if isinstance(node, Num):
        s = repr(node.value)
        if node.value < 0:
            s = f"-{repr(-node.value)}"
            return f"({s})" if prec > 0 else s
        return s
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        s = "-" + to_text(node.arg, 3)
        return f"({s})" if prec > 3 else s
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        s = f"{to_text(node.left, p)} {node.op} {to_text(node.right, p + 1)}"
        return f"({s})" if prec > p else s
    if isinstance(node, Pow):
        s = f"{to_text(node.base, 5)}^{node.exponent}"
        return f"({s})" if prec > 4 else s
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Native):
        raise TypeError(f"native component {node.name!r} has no textual form")
    raise TypeError(f"not an expression node: {node!r}")


# -- construction helpers with light folding -------------------------------


def num(c: float) -> Num:
    return Num(float(c))


def add(a, b):
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return BinOp("+", a, b)


def sub(a, b):
    if b == ZERO:
        return a
    if a == ZERO:
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return BinOp("*", a, b)


def div(a, b):
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return BinOp("/", a, b)


def neg(a):
    if a == ZERO:
        return ZERO
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def total(terms):
    out = ZERO
    for t in terms:
        out = add(out, t)
    return out


def diff(node: Expr, var: str) -> Expr:
    """Symbolic partial derivative with respect to a canonical variable name."""
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.name == var else ZERO
    if isinstance(node, Neg):
        return neg(diff(node.arg, var))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = diff(a, var), diff(b, var)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        return sub(div(da, b), div(mul(a, db), Pow(b, 2)))
    if isinstance(node, Pow):
        da = diff(node.base, var)
        k = node.exponent
        if k == 0 or da == ZERO:
            return ZERO
        inner = ONE if k == 1 else node.base if k == 2 else Pow(node.base, k - 1)
        return mul(mul(num(k), inner), da)
    if isinstance(node, Call):
        a = node.args[0]
        da = diff(a, var)
        f = node.func
        if f == "atan2":
            b = node.args[1]
            db = diff(b, var)
            if da == ZERO and db == ZERO:
                return ZERO
            return div(sub(mul(b, da), mul(a, db)), add(Pow(a, 2), Pow(b, 2)))
        if da == ZERO:
            return ZERO
        if f == "sqrt":
            return div(da, mul(num(2), node))
        if f == "sin":
            return mul(Call("cos", (a,)), da)
        if f == "cos":
            return neg(mul(Call("sin", (a,)), da))
        if f == "exp":
            return mul(node, da)
        if f == "log":
            return div(da, a)
    raise TypeError(f"cannot differentiate {node!r} symbolically")


# -- compilation ----------------------------------------------------------


class _Compiler:
    def __init__(self, n: int):
        self.n = n
        self.ns = {
            "F_sqrt": jets.sqrt, "F_sin": jets.sin, "F_cos": jets.cos,
            "F_exp": jets.exp, "F_log": jets.log, "F_atan2": jets.atan2,
            "P": jets._int_power,
        }

    def code(self, node: Expr) -> str:
        if isinstance(node, Num):
            return repr(node.value)
        if isinstance(node, Var):
            return f"V[{variable_index(node.name, self.n)}]"
        if isinstance(node, Neg):
            return f"(-{self.code(node.arg)})"
        if isinstance(node, BinOp):
            return f"({self.code(node.left)} {node.op} {self.code(node.right)})"
        if isinstance(node, Pow):
            return f"P({self.code(node.base)}, {node.exponent})"
        if isinstance(node, Call):
            return f"F_{node.func}({', '.join(self.code(a) for a in node.args)})"
        if isinstance(node, Native):
            key = f"N{len(self.ns)}"
            self.ns[key] = node.fn
            return f"{key}(V)"
        raise TypeError(f"not an expression node: {node!r}")

    def function(self, nodes: Sequence[Expr]):
        body = ", ".join(self.code(e) for e in nodes)
        return eval(f"lambda V: ({body},)", self.ns)  # noqa: S307 - generated from a validated tree


# -- field definitions ----------------------------------------------------


def component_labels(kind: str, n: int) -> list[str]:
    """Canonical component labels, in storage order."""
    r = range(1, n + 1)
    if kind in ("spray", "covector"):
        return [str(i) for i in r]
    if kind == "scalar":
        return [""]
    if kind == "sym2tensor":
        return [f"{i}{j}" for i in r for j in r if i <= j]
    if kind == "twoform":
        return ([f"a{i}{j}" for i in r for j in r if i < j]
                + [f"b{i}{j}" for i in r for j in r]
                + [f"c{i}{j}" for i in r for j in r if i < j])
    raise ValueError(f"unknown field kind {kind!r}")


@dataclass(frozen=True)
class FieldDef:
    """Parsed component expressions of one geometric object."""

    kind: str
    n: int
    exprs: tuple
    names: tuple = dc_field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        labels = component_labels(self.kind, self.n)
        if len(self.exprs) != len(labels):
            raise ArityError(f"{self.kind} field with n={self.n} needs {len(labels)} components, got {len(self.exprs)}")
        if not self.names:
            object.__setattr__(self, "names", tuple(_default_name(self.kind, lab) for lab in labels))

    @property
    def labels(self) -> list[str]:
        return component_labels(self.kind, self.n)

    def component(self, label: str) -> Expr:
        return self.exprs[self.labels.index(label)]

    @cached_property
    def _fn(self):
        return _Compiler(self.n).function(self.exprs)

    def __call__(self, V):
        """Evaluate every component on a list of 2n variables (floats or jets)."""
        return self._fn(V)

    def to_source(self) -> str:
        return "\n".join(f"{name} = {to_text(e)};" for name, e in zip(self.names, self.exprs))

    def __str__(self):
        return self.to_source()


def _default_name(kind, label):
    prefix = {"spray": "G", "covector": "T", "scalar": "F", "sym2tensor": "h", "twoform": ""}[kind]
    return prefix + label


_INDEXED = re.compile(r"^[A-Za-z_]*?(\d+)$")


def parse_field(source: str, kind: str, n: int) -> FieldDef:
    """Parse a field definition of the given kind in base dimension ``n``.

    Spray and covector components are addressed by a trailing index
    (``G1``, ``theta2``...), tensor components by two digits (``h12``), and
    two-form components by a block letter plus two digits (``a12`` for
    dx^1^dx^2, ``b13`` for dx^1^dy^3, ``c23`` for dy^2^dy^3).  Omitted tensor
    and two-form components are zero.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown field kind {kind!r}")
    if not 1 <= n <= 9:
        raise ValueError("base dimension must be between 1 and 9")
    parser = _Parser(source, n)
    stmts = parser.statements()
    labels = component_labels(kind, n)
    slots: dict[str, tuple] = {}
    for tok, expr in stmts:
        label = _label_for(tok, kind, n, parser)
        if label in slots:
            raise ArityError(f"component {label!r} of {kind} assigned twice (line {tok.line})")
        slots[label] = (tok.text, expr)
    if kind in ("spray", "covector", "scalar") and len(slots) != len(labels):
        raise ArityError(f"{kind} field with n={n} needs {len(labels)} component(s), got {len(slots)}")
    exprs = tuple(slots[lab][1] if lab in slots else ZERO for lab in labels)
    names = tuple(slots[lab][0] if lab in slots else _default_name(kind, lab) for lab in labels)
    return FieldDef(kind, n, exprs, names)


def _label_for(tok, kind, n, parser):
    name = tok.text
    if kind == "scalar":
        return ""
    if kind in ("spray", "covector"):
        m = _INDEXED.match(name)
        if not m or not 1 <= int(m.group(1)) <= n:
            raise ArityError(f"cannot map {name!r} to a component index 1..{n} (line {tok.line})")
        return m.group(1).lstrip("0") or "0"
    if kind == "sym2tensor":
        m = re.match(r"^[A-Za-z_]*?(\d)(\d)$", name)
        if not m:
            raise ArityError(f"tensor component {name!r} must end in two digits (line {tok.line})")
        i, j = sorted((int(m.group(1)), int(m.group(2))))
        if not (1 <= i <= n and 1 <= j <= n):
            raise ArityError(f"tensor index out of range in {name!r} (line {tok.line})")
        return f"{i}{j}"
    m = re.match(r"^.*?([abc])(\d)(\d)$", name)
    if not m:
        raise ArityError(f"two-form component {name!r} must look like a12, b13 or c23 (line {tok.line})")
    block, i, j = m.group(1), int(m.group(2)), int(m.group(3))
    if not (1 <= i <= n and 1 <= j <= n):
        raise ArityError(f"two-form index out of range in {name!r} (line {tok.line})")
    if block in "ac" and i >= j:
        raise ArityError(f"{block}-block components are stored for i < j only: {name!r} (line {tok.line})")
    return f"{block}{i}{j}"


def load_field(path_or_text: str, kind: str, n: int) -> FieldDef:
    """Parse from a UTF-8 file when ``path_or_text`` names one, else from the string itself."""
    p = Path(path_or_text)
    try:
        is_file = p.is_file()
    except OSError:
        is_file = False
    text = p.read_text(encoding="utf-8") if is_file else path_or_text
    return parse_field(text, kind, n)


def from_exprs(kind: str, n: int, exprs: Sequence[Expr]) -> FieldDef:
    return FieldDef(kind, n, tuple(exprs))


# -- evaluation -----------------------------------------------------------


def fibre_dirs(n: int) -> tuple:
    return tuple(range(n, 2 * n))


def seed(p: Point, order: int, dirs=None) -> list:
    if order == 0:
        return [float(c) for c in p.z]
    if order >= 3 and dirs is None:
        dirs = fibre_dirs(p.n)
    return jets.variables(p.z, order, dirs)


def eval_field_jet(f: FieldDef, p: Point, order: int, dirs=None) -> list:
    """Jets of every component of ``f`` at ``p``.

    Order-3 jets store third derivatives over the fibre directions unless
    ``dirs`` says otherwise.  Order 0 returns plain floats.
    """
    if p.n != f.n:
        raise ValueError(f"point of dimension {p.n} for a field with n={f.n}")
    if not 0 <= order <= 3:
        raise ValueError("order must be between 0 and 3")
    V = seed(p, order, dirs)
    out = f(V)
    if order == 0:
        return [float(c) for c in out]
    d = V[0].dirs
    return [jets.lift(c, 2 * f.n, order, d) for c in out]


def eval_field(f: FieldDef, p: Point) -> np.ndarray:
    return np.array(eval_field_jet(f, p, 0))


def eval_z(f: FieldDef, z) -> np.ndarray:
    """Component values at a raw coordinate vector (no zero-section guard)."""
    return np.array([float(c) for c in f([float(c) for c in z])])


def sym_matrix(values, n: int) -> np.ndarray:
    """Symmetric matrix from upper-triangle storage (works for value arrays with trailing axes)."""
    values = np.asarray(values)
    out = np.zeros((n, n) + values.shape[1:])
    k = 0
    for i in range(n):
        for j in range(i, n):
            out[i, j] = values[k]
            out[j, i] = values[k]
            k += 1
    return out


def fd_oracle(f: FieldDef, p: Point, multi_index, component: int = 0, richardson: bool = True) -> float:
    """Finite-difference estimate of a partial derivative of one component.

    ``multi_index`` lists variable positions (0..2n-1) or names (``"u"``, ``"x2"``).
    """
    idx = tuple(variable_index(i, f.n) if isinstance(i, str) else int(i) for i in multi_index)

    def fn(z):
        if np.linalg.norm(z[f.n:]) < EPS_FIBRE:
            raise DomainError("finite-difference stencil crosses the zero section")
        return eval_z(f, z)[component]

    return jets.fd_derivative(fn, p.z, idx, richardson=richardson)
