"""Built-in sprays and certificates: the spiral spray on R^3, Shen's circle spray on R^2,
flat space and Riemannian baselines, plus the path-space chart of the spirals."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fieldspec as fs
from . import jets
from . import metrizability as mz
from . import spray as sp
from .errors import DegenerateRay, MetricError
from .fieldspec import FieldDef, Point
from .metrizability import ConditionReport, _amax, _entry

TWO_PI = 2.0 * math.pi

SPIRAL_SPRAY = """
G1 = v*sqrt(u^2+v^2+w^2)/2
G2 = -u*sqrt(u^2+v^2+w^2)/2
G3 = 0
"""
CIRCLE_SPRAY = "G1 = v*sqrt(u^2+v^2)/2; G2 = -u*sqrt(u^2+v^2)/2"

# closed form dx^dy + dx^d(u/L) + dy^d(v/L) + dz^d(w/L); d(y^i/L) = dy^i/L - y^i y^j dy^j / L^3
SPIRAL_OMEGA = """
a12 = 1
b11 = 1/sqrt(u^2+v^2+w^2) - u^2/sqrt(u^2+v^2+w^2)^3
b12 = -u*v/sqrt(u^2+v^2+w^2)^3
b13 = -u*w/sqrt(u^2+v^2+w^2)^3
b21 = -u*v/sqrt(u^2+v^2+w^2)^3
b22 = 1/sqrt(u^2+v^2+w^2) - v^2/sqrt(u^2+v^2+w^2)^3
b23 = -v*w/sqrt(u^2+v^2+w^2)^3
b31 = -u*w/sqrt(u^2+v^2+w^2)^3
b32 = -v*w/sqrt(u^2+v^2+w^2)^3
b33 = 1/sqrt(u^2+v^2+w^2) - w^2/sqrt(u^2+v^2+w^2)^3
"""

# -dx^dy + mu^-3 (v du - u dv)^(v dx - u dy)
CIRCLE_HILBERT = """
a12 = -1
b11 = -v^2/sqrt(u^2+v^2)^3
b12 = u*v/sqrt(u^2+v^2)^3
b21 = u*v/sqrt(u^2+v^2)^3
b22 = -u^2/sqrt(u^2+v^2)^3
"""


def spiral_finsler(center=(0.0, 0.0)) -> FieldDef:
    """sqrt(u^2+v^2+w^2) + (y - y0) u / 2 - (x - x0) v / 2."""
    x0, y0 = map(float, center)
    return fs.parse_field(f"F = sqrt(u^2+v^2+w^2) + ((y - {y0!r})*u - (x - {x0!r})*v)/2", "scalar", 3)


def circle_finsler(center=(0.0, 0.0)) -> FieldDef:
    x0, y0 = map(float, center)
    return fs.parse_field(f"F = sqrt(u^2+v^2) + ((y - {y0!r})*u - (x - {x0!r})*v)/2", "scalar", 2)


def euclidean_norm(n: int) -> FieldDef:
    return fs.from_exprs("scalar", n, [sp.norm_expr(n)])


def spiral_omega() -> FieldDef:
    return fs.parse_field(SPIRAL_OMEGA, "twoform", 3)


def circle_hilbert_closed_form() -> FieldDef:
    return fs.parse_field(CIRCLE_HILBERT, "twoform", 2)


def flat_spray(n: int) -> FieldDef:
    return fs.from_exprs("spray", n, [fs.ZERO] * n)


# -- Riemannian baseline -------------------------------------------------------------


def _solve_small(Amat, b):
    """Gaussian elimination without pivoting on lists of floats or jets (A symmetric positive definite)."""
    n = len(b)
    A = [list(row) for row in Amat]
    b = list(b)
    for k in range(n):
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            for j in range(k, n):
                A[i][j] = A[i][j] - f * A[k][j]
            b[i] = b[i] - f * b[k]
    out = [None] * n
    for i in reversed(range(n)):
        s = b[i]
        for j in range(i + 1, n):
            s = s - A[i][j] * out[j]
        out[i] = s / A[i][i]
    return out


def riemannian_spray(metric: FieldDef, probes=None) -> FieldDef:
    """G^i = 1/2 g^il [l, jk] y^j y^k with Christoffel symbols of the first kind from g.

    Metric derivatives are formed symbolically and then evaluated as jets together
    with the inverse metric, so the spray components accept floats or jets.
    """
    if metric.kind != "sym2tensor":
        raise ValueError("metric must be a sym2tensor field")
    n = metric.n
    fibre = {f"y{i + 1}" for i in range(n)}
    for e in metric.exprs:
        if _uses(e, fibre):
            raise ValueError("metric components may depend on the base coordinates only")
    for q in probes or sp.probe_points(n):
        if np.min(np.linalg.eigvalsh(fs.sym_matrix(fs.eval_field(metric, q), n))) <= 0:
            raise MetricError(f"metric is not positive definite at x={q.x.tolist()}")
    dmetric = [fs.from_exprs("sym2tensor", n, [fs.diff(e, f"x{k + 1}") for e in metric.exprs]) for k in range(n)]

    def _mat(vals):
        m = [[None] * n for _ in range(n)]
        k = 0
        for i in range(n):
            for j in range(i, n):
                m[i][j] = m[j][i] = vals[k]
                k += 1
        return m

    def coefficients(V):
        g = _mat(metric(V))
        dg = [_mat(d(V)) for d in dmetric]  # dg[k][i][j] = d_k g_ij
        y = V[n:]
        c = []
        for l in range(n):
            s = 0.0
            for j in range(n):
                for k in range(n):
                    s = s + (dg[j][l][k] - 0.5 * dg[l][j][k]) * y[j] * y[k]
            c.append(s)
        return [0.5 * a for a in _solve_small(g, c)]

    exprs = [fs.Native(f"riemannian_G{i + 1}", (lambda V, i=i: coefficients(V)[i])) for i in range(n)]
    return fs.from_exprs("spray", n, exprs)


def _uses(node, names) -> bool:
    if isinstance(node, fs.Var):
        return node.name in names
    if isinstance(node, (fs.Num, fs.Native)):
        return False
    if isinstance(node, fs.Neg):
        return _uses(node.arg, names)
    if isinstance(node, fs.BinOp):
        return _uses(node.left, names) or _uses(node.right, names)
    if isinstance(node, fs.Pow):
        return _uses(node.base, names)
    return any(_uses(a, names) for a in node.args)


def builtin_spray(name: str, n: int | None = None, metric: FieldDef | None = None) -> FieldDef:
    """``spiral`` (n=3), ``circle`` (n=2), ``flat`` (any n, default 3) or ``riemannian`` (needs ``metric``)."""
    key = name.strip().lower()
    if key == "spiral":
        return fs.parse_field(SPIRAL_SPRAY, "spray", 3)
    if key == "circle":
        return fs.parse_field(CIRCLE_SPRAY, "spray", 2)
    if key == "flat":
        return flat_spray(n or 3)
    if key == "riemannian":
        if metric is None:
            raise ValueError("riemannian spray needs metric components")
        return riemannian_spray(metric)
    raise ValueError(f"unknown built-in spray {name!r}")


BUILTIN_FINSLER = {"spiral": spiral_finsler, "circle": circle_finsler}


# -- path space of the spirals ---------------------------------------------------------


@dataclass(frozen=True)
class PathCoords:
    xi: float
    eta: float
    nu: float
    vartheta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.xi, self.eta, self.nu, self.vartheta])

    def distance(self, other: "PathCoords") -> float:
        """Max coordinate difference, with the phase compared on the circle."""
        d = np.abs(self.as_array()[:3] - other.as_array()[:3])
        dphi = abs(self.vartheta - other.vartheta) % TWO_PI
        return float(max(d.max(), min(dphi, TWO_PI - dphi)))


def _path_map(V):
    """(xi, eta, nu, phase) on floats or jets; the phase is not reduced."""
    x, y, z, u, v, w = V
    lam = jets.sqrt(u * u + v * v + w * w)
    nu = w / lam
    return x - v / lam, y + u / lam, nu, jets.atan2(-u, v) - z / nu


def _check_genuine(p: Point):
    if p.n != 3:
        raise ValueError("path coordinates are defined for the spiral spray on R^3")
    u, v, w = p.y
    lam = float(np.linalg.norm(p.y))
    if abs(w) <= 1e-12 * lam:
        raise DegenerateRay("w = 0: the path is a circle, outside the spiral chart")
    if math.hypot(u, v) <= 1e-12 * lam:
        raise DegenerateRay("u = v = 0: the path is a vertical line, outside the spiral chart")


def to_path_coords_spiral(p: Point) -> PathCoords:
    _check_genuine(p)
    xi, eta, nu, phase = _path_map([float(c) for c in p.z])
    return PathCoords(float(xi), float(eta), float(nu), float(phase) % TWO_PI)


def path_jacobian_spiral(p: Point) -> np.ndarray:
    """4 x 6 Jacobian of (xi, eta, nu, vartheta) with respect to (x, y, z, u, v, w)."""
    _check_genuine(p)
    return np.array([j.grad for j in _path_map(jets.variables(p.z, 1))])


def omega_path_matrix(nu: float) -> np.ndarray:
    """Matrix of dxi^deta + nu dnu^dvartheta in (xi, eta, nu, vartheta)."""
    O = np.zeros((4, 4))
    O[0, 1], O[1, 0] = 1.0, -1.0
    O[2, 3], O[3, 2] = nu, -nu
    return O


def omega_path_spiral(pc: PathCoords, t1, t2) -> float:
    return float(np.asarray(t1, dtype=float) @ omega_path_matrix(pc.nu) @ np.asarray(t2, dtype=float))


def path_point(pc: PathCoords, z: float = 0.0, lam: float = 1.0) -> Point:
    """The point of T R^3 on the spiral ``pc`` at height z, with speed lam."""
    r = math.sqrt(1.0 - pc.nu**2)
    phi = z / pc.nu + pc.vartheta
    mu = lam * r
    x = (pc.xi + r * math.cos(phi), pc.eta + r * math.sin(phi), z)
    return Point(x, (-mu * math.sin(phi), mu * math.cos(phi), pc.nu * lam))


def _signed_deviation(a: np.ndarray, ref: np.ndarray):
    plus, minus = _amax(a - ref), _amax(a + ref)
    return (plus, 1.0) if plus <= minus else (minus, -1.0)


def _entry_with_value(name, residual, scale, tol, value):
    e = _entry(name, residual, scale, tol)
    return mz.Entry(e.name, e.residual, e.tolerance, e.relative, float(value))


def pullback_check_spiral(p: Point, tol: float = 1e-9) -> ConditionReport:
    """Pulled-back Omega, the closed-form omega, the Hilbert 2-form (up to sign) and the Kahler lift."""
    J = path_jacobian_spiral(p)
    pc = to_path_coords_spiral(p)
    pulled = J.T @ omega_path_matrix(pc.nu) @ J
    closed = mz.FieldTwoForm(spiral_omega()).value(p)
    F = spiral_finsler()
    hilbert = mz.HilbertForm(F).value(p)
    kahler = mz.KahlerForm(builtin_spray("spiral"), F).value(p)
    dev, sign = _signed_deviation(hilbert, closed)
    entries = (
        _entry("pullback_vs_closed", _amax(pulled - closed), _amax(closed), tol),
        _entry_with_value("hilbert_vs_closed", dev, _amax(closed), tol, sign),
        _entry("kahler_vs_closed", _amax(kahler - closed), _amax(closed), tol),
    )
    return ConditionReport(p, "example", entries)


def circle_xi_eta_matrix(p: Point) -> np.ndarray:
    """Pull-back of dxi^deta for the circle spray, xi = x - v/mu, eta = y + u/mu."""
    if p.n != 2:
        raise ValueError("circle chart lives on R^2")
    x, y, u, v = jets.variables(p.z, 1)
    mu = jets.sqrt(u * u + v * v)
    J = np.array([(x - v / mu).grad, (y + u / mu).grad])
    return J.T @ np.array([[0.0, 1.0], [-1.0, 0.0]]) @ J


def circle_identity_check(p: Point, tol: float = 1e-10) -> ConditionReport:
    """Hilbert 2-form of the circle F against its closed form and against -dxi^deta."""
    hilbert = mz.HilbertForm(circle_finsler()).value(p)
    closed = mz.FieldTwoForm(circle_hilbert_closed_form()).value(p)
    target = -circle_xi_eta_matrix(p)
    entries = (
        _entry("hilbert_vs_closed_form", _amax(hilbert - closed), _amax(closed), tol),
        _entry("hilbert_vs_minus_dxi_deta", _amax(hilbert - target), _amax(target), tol),
    )
    return ConditionReport(p, "example", entries)


def lagrangian_fibre_residual(x, nu: float, vartheta: float) -> float:
    """|Omega| restricted to the spirals through a fixed base point, parametrized by (nu, vartheta)."""
    x0, y0, z0 = map(float, x)
    n_, t_ = jets.variables([nu, vartheta], 1)
    r = jets.sqrt(1.0 - n_ * n_)
    phi = z0 / n_ + t_
    xi = x0 - r * jets.cos(phi)
    eta = y0 - r * jets.sin(phi)
    J = np.array([xi.grad, eta.grad, n_.grad, t_.grad])
    return float(abs((J.T @ omega_path_matrix(nu) @ J)[0, 1]))


# -- other checks of the worked example --------------------------------------------------


def fibre_directions(n: int, count: int) -> np.ndarray:
    """Quasi-uniform unit vectors (Fibonacci lattice for n = 3, equal angles for n = 2)."""
    if n == 2:
        a = np.linspace(0.0, TWO_PI, count, endpoint=False)
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if n != 3:
        raise ValueError("fibre direction grids are provided for n = 2 and n = 3")
    k = np.arange(count) + 0.5
    zc = 1.0 - 2.0 * k / count
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    r = np.sqrt(1.0 - zc * zc)
    return np.stack([r * np.cos(phi), r * np.sin(phi), zc], axis=1)


def fibre_minimum(F: FieldDef, x, count: int = 4000) -> float:
    """Minimum of F over a grid of unit fibre directions at base point x."""
    return float(min(fs.eval_field(F, Point(x, d))[0] for d in fibre_directions(F.n, count)))


def restriction_residual(points: int = 50, seed: int = 0) -> float:
    """Max |G_spiral(x, y, z0; u, v, 0) - (G_circle(x, y; u, v), 0)| over random points."""
    spiral, circle = builtin_spray("spiral"), builtin_spray("circle")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        x = rng.uniform(-2, 2, 3)
        y2 = rng.normal(size=2)
        a = fs.eval_field(spiral, Point(x, [y2[0], y2[1], 0.0]))
        b = fs.eval_field(circle, Point(x[:2], y2))
        worst = max(worst, float(np.max(np.abs(a - np.append(b, 0.0)))))
    return worst
