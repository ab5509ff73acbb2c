"""Truncated multivariate Taylor arithmetic up to third order.

A :class:`Jet` carries the value of a function together with its gradient,
Hessian and (optionally) third derivatives with respect to ``dim`` seed
variables.  Third derivatives are only stored for a declared subset of the
variables (``dirs``), which keeps the cost of order-3 work proportional to
``len(dirs)**3`` rather than ``dim**3``.

Jets support the Python arithmetic operators, mix freely with plain floats,
and the module-level functions (:func:`sqrt`, :func:`sin`, ...) accept either
jets or floats, so one compiled expression serves both kinds of evaluation.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, DivisionByZero, DomainError

EPS_DOM = 1e-12
DIV_GUARD = 1e-300

# central-difference step per derivative order
FD_STEPS = {1: 1e-6, 2: 1e-4, 3: 1e-3}


def _sym3(H, g):
    # H_ij g_k + H_ik g_j + H_jk g_i
    return H[:, :, None] * g[None, None, :] + H[:, None, :] * g[None, :, None] + H[None, :, :] * g[:, None, None]


def _outer3(g):
    return g[:, None, None] * g[None, :, None] * g[None, None, :]


class Jet:
    """Value and partial derivatives (orders 0-3) of a scalar function."""

    __slots__ = ("order", "value", "grad", "hess", "third", "dirs", "_idx")

    def __init__(self, value, grad=None, hess=None, third=None, dirs=None, order=None):
        self.value = float(value)
        self.grad = None if grad is None else np.asarray(grad, dtype=float)
        self.hess = None if hess is None else np.asarray(hess, dtype=float)
        self.third = None if third is None else np.asarray(third, dtype=float)
        if order is None:
            order = 0 if grad is None else 1 if hess is None else 2 if third is None else 3
        self.order = order
        if order >= 3:
            if dirs is None:
                dirs = tuple(range(len(self.grad)))
            self.dirs = tuple(int(d) for d in dirs)
            self._idx = np.asarray(self.dirs, dtype=int)
        else:
            self.dirs = None
            self._idx = None

    # -- construction -----------------------------------------------------

    @property
    def dim(self) -> int:
        return 0 if self.grad is None else len(self.grad)

    @classmethod
    def constant(cls, c: float, dim: int, order: int, dirs=None) -> "Jet":
        grad = np.zeros(dim) if order >= 1 else None
        hess = np.zeros((dim, dim)) if order >= 2 else None
        third = None
        if order >= 3:
            dirs = tuple(range(dim)) if dirs is None else tuple(dirs)
            k = len(dirs)
            third = np.zeros((k, k, k))
        return cls(c, grad, hess, third, dirs, order)

    def _like(self, c: float) -> "Jet":
        return Jet.constant(c, self.dim, self.order, self.dirs)

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.order != self.order or other.dim != self.dim or other.dirs != self.dirs:
                raise DimensionMismatch(
                    f"jet shapes differ: order {self.order}/{other.order}, "
                    f"dim {self.dim}/{other.dim}, dirs {self.dirs}/{other.dirs}"
                )
            return other
        return self._like(other)

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, value={self.value!r}, dim={self.dim})"

    # -- arithmetic -------------------------------------------------------

    def __neg__(self):
        return Jet(
            -self.value,
            None if self.grad is None else -self.grad,
            None if self.hess is None else -self.hess,
            None if self.third is None else -self.third,
            self.dirs,
            self.order,
        )

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value + other, self.grad, self.hess, self.third, self.dirs, self.order)
        b = self._coerce(other)
        return Jet(
            self.value + b.value,
            None if self.order < 1 else self.grad + b.grad,
            None if self.order < 2 else self.hess + b.hess,
            None if self.order < 3 else self.third + b.third,
            self.dirs,
            self.order,
        )

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = float(other)
            return Jet(
                self.value * c,
                None if self.order < 1 else self.grad * c,
                None if self.order < 2 else self.hess * c,
                None if self.order < 3 else self.third * c,
                self.dirs,
                self.order,
            )
        b = self._coerce(other)
        a = self
        grad = hess = third = None
        if a.order >= 1:
            grad = a.grad * b.value + a.value * b.grad
        if a.order >= 2:
            ab = np.outer(a.grad, b.grad)
            hess = a.hess * b.value + a.value * b.hess + ab + ab.T
        if a.order >= 3:
            idx = a._idx
            ag, bg = a.grad[idx], b.grad[idx]
            aH, bH = a.hess[np.ix_(idx, idx)], b.hess[np.ix_(idx, idx)]
            third = a.third * b.value + a.value * b.third + _sym3(aH, bg) + _sym3(bH, ag)
        return Jet(a.value * b.value, grad, hess, third, a.dirs, a.order)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        x = self.value
        if abs(x) < DIV_GUARD:
            raise DivisionByZero(f"division by a jet with value {x!r}")
        return _chain(self, 1.0 / x, -1.0 / x**2, 2.0 / x**3, -6.0 / x**4)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            if abs(other) < DIV_GUARD:
                raise DivisionByZero(f"division by {other!r}")
            return self * (1.0 / other)
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if isinstance(k, (int, np.integer)):
            return _int_power(self, int(k))
        return pow_const(self, k)


def _chain(a: Jet, f0, f1, f2, f3) -> Jet:
    """Compose a scalar function (given its derivatives at a.value) with a jet."""
    grad = hess = third = None
    if a.order >= 1:
        grad = f1 * a.grad
    if a.order >= 2:
        hess = f1 * a.hess + f2 * np.outer(a.grad, a.grad)
    if a.order >= 3:
        idx = a._idx
        g = a.grad[idx]
        H = a.hess[np.ix_(idx, idx)]
        third = f1 * a.third + f2 * _sym3(H, g) + f3 * _outer3(g)
    return Jet(f0, grad, hess, third, a.dirs, a.order)


def _int_power(a, k: int):
    if not isinstance(a, Jet):
        if k < 0 and a == 0:
            raise DivisionByZero("zero raised to a negative power")
        return float(a) ** k
    if k == 0:
        return a._like(1.0)
    if k == 1:
        return a
    x = a.value
    if k < 0 and abs(x) < DIV_GUARD:
        raise DivisionByZero("zero raised to a negative power")

    def term(coef, e):
        return 0.0 if coef == 0 else coef * x**e

    return _chain(a, x**k, term(k, k - 1), term(k * (k - 1), k - 2), term(k * (k - 1) * (k - 2), k - 3))


# -- elementary functions -------------------------------------------------


def sqrt(a):
    x = a.value if isinstance(a, Jet) else float(a)
    if x < EPS_DOM:
        raise DomainError(f"sqrt argument {x!r} below {EPS_DOM}")
    if not isinstance(a, Jet):
        return math.sqrt(x)
    s = math.sqrt(x)
    return _chain(a, s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x))


def exp(a):
    if not isinstance(a, Jet):
        return math.exp(a)
    e = math.exp(a.value)
    return _chain(a, e, e, e, e)


def log(a):
    x = a.value if isinstance(a, Jet) else float(a)
    if x < EPS_DOM:
        raise DomainError(f"log argument {x!r} below {EPS_DOM}")
    if not isinstance(a, Jet):
        return math.log(x)
    return _chain(a, math.log(x), 1.0 / x, -1.0 / x**2, 2.0 / x**3)


def sin(a):
    if not isinstance(a, Jet):
        return math.sin(a)
    s, c = math.sin(a.value), math.cos(a.value)
    return _chain(a, s, c, -s, -c)


def cos(a):
    if not isinstance(a, Jet):
        return math.cos(a)
    s, c = math.sin(a.value), math.cos(a.value)
    return _chain(a, c, -s, -c, s)


def atan(a):
    if not isinstance(a, Jet):
        return math.atan(a)
    x = a.value
    q = 1.0 + x * x
    return _chain(a, math.atan(x), 1.0 / q, -2.0 * x / q**2, (6.0 * x * x - 2.0) / q**3)


def atan2(a, b):
    """Two-argument arctangent; derivatives come from atan of the smaller ratio."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        if a == 0 and b == 0:
            raise DomainError("atan2(0, 0) is undefined")
        return math.atan2(a, b)
    av = a.value if isinstance(a, Jet) else float(a)
    bv = b.value if isinstance(b, Jet) else float(b)
    if math.hypot(av, bv) < EPS_DOM:
        raise DomainError("atan2 near the origin")
    if abs(bv) >= abs(av):
        t = atan(a / b)
    else:
        t = -atan(b / a)
    if not isinstance(t, Jet):
        return math.atan2(av, bv)
    return Jet(math.atan2(av, bv), t.grad, t.hess, t.third, t.dirs, t.order)


def pow_const(a, c: float):
    """``a**c`` for a real constant exponent (argument must be positive unless c is integral)."""
    if float(c).is_integer():
        return _int_power(a, int(c))
    x = a.value if isinstance(a, Jet) else float(a)
    if x < EPS_DOM:
        raise DomainError(f"non-integer power of {x!r}")
    if not isinstance(a, Jet):
        return x**c
    return _chain(a, x**c, c * x ** (c - 1), c * (c - 1) * x ** (c - 2), c * (c - 1) * (c - 2) * x ** (c - 3))


FUNCTIONS: dict[str, Callable] = {
    "sqrt": sqrt,
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "log": log,
    "atan2": atan2,
}

_ARITH = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    if op not in _ARITH:
        raise ValueError(f"unknown operation {op!r}")
    if isinstance(a, Jet) and isinstance(b, Jet):
        a._coerce(b)
    return _ARITH[op](a, b)


def jet_func(a, f: str, *args):
    """Apply a named elementary function (``pow_const`` takes the exponent as extra arg)."""
    if f == "pow_const":
        return pow_const(a, *args)
    if f == "atan2":
        return atan2(a, *args)
    try:
        fn = FUNCTIONS[f]
    except KeyError:
        raise ValueError(f"unknown function {f!r}") from None
    return fn(a)


# -- seeding and stacking -------------------------------------------------


def variables(values: Sequence[float], order: int, dirs: Iterable[int] | None = None) -> list[Jet]:
    """Seed jets for independent variables at ``values``."""
    values = np.asarray(values, dtype=float)
    dim = len(values)
    if order >= 3:
        dirs = tuple(range(dim)) if dirs is None else tuple(dirs)
    else:
        dirs = None
    eye = np.eye(dim)
    out = []
    for i, v in enumerate(values):
        if order == 0:
            out.append(Jet(v, order=0))
            continue
        hess = np.zeros((dim, dim)) if order >= 2 else None
        third = np.zeros((len(dirs),) * 3) if order >= 3 else None
        out.append(Jet(v, eye[i].copy(), hess, third, dirs, order))
    return out


def lift(value, dim: int, order: int, dirs=None) -> Jet:
    """Promote a float (e.g. a constant component) to a jet of the given shape."""
    if isinstance(value, Jet):
        return value
    return Jet.constant(value, dim, order, dirs)


def stack(jets: Sequence[Jet]):
    """Stack component jets into arrays: values, grads, hessians, thirds (missing orders are None)."""
    values = np.array([j.value for j in jets])
    order = min(j.order for j in jets) if jets else 0
    grads = np.array([j.grad for j in jets]) if order >= 1 else None
    hess = np.array([j.hess for j in jets]) if order >= 2 else None
    third = np.array([j.third for j in jets]) if order >= 3 else None
    return values, grads, hess, third


def derivative(j: Jet, multi_index: Sequence[int]) -> float:
    """Read one partial derivative out of a jet (indices refer to seed variables)."""
    m = len(multi_index)
    if m > j.order:
        raise ValueError(f"jet of order {j.order} has no order-{m} data")
    if m == 0:
        return j.value
    if m == 1:
        return float(j.grad[multi_index[0]])
    if m == 2:
        return float(j.hess[multi_index[0], multi_index[1]])
    pos = [j.dirs.index(i) if i in j.dirs else None for i in multi_index]
    if None in pos:
        raise ValueError(f"third derivative {tuple(multi_index)} outside stored directions {j.dirs}")
    return float(j.third[tuple(pos)])


def fd_derivative(func: Callable[[np.ndarray], float], z: Sequence[float], multi_index: Sequence[int],
                  h: float | None = None, richardson: bool = True) -> float:
    """Central finite-difference estimate of a partial derivative of ``func`` at ``z``.

    The estimate composes one central difference per index.  With
    ``richardson`` the step-h and step-2h estimates are combined to cancel the
    leading h**2 truncation term.
    """
    z = np.asarray(z, dtype=float)
    m = len(multi_index)
    if m == 0:
        return float(func(z))
    if m > 3:
        raise ValueError("finite differences are provided up to order 3")
    if h is None:
        h = FD_STEPS[m] * (max(1.0, float(np.linalg.norm(z))) if m == 1 else 1.0)

    def central(step):
        total = 0.0
        for signs in itertools.product((1.0, -1.0), repeat=m):
            shift = np.zeros_like(z)
            for s, i in zip(signs, multi_index):
                shift[i] += s * step
            total += math.prod(signs) * float(func(z + shift))
        return total / (2.0 * step) ** m

    d1 = central(h)
    if not richardson:
        return d1
    return (4.0 * d1 - central(2.0 * h)) / 3.0
