"""Objects derived from a spray: connection, horizontal frame, curvature, covariant derivative.

Index conventions (0-based arrays, upper index first):

* ``gamma_j[i, j]``      = dG^i/dy^j
* ``gamma_jk[k, i, j]``  = d2G^k/dy^i dy^j
* ``dGamma_dx[i, j]``    = dG^i/dx^j
* ``dGammaj_dx[i, j, k]`` = d(G^i_j)/dx^k
* ``R3[l, i, j]``        = R^l_ij, with [H_i, H_j] = -R^l_ij V_l
* ``R2[k, j]``           = R^k_j = R^k_jl y^l

Tangent vectors on the slit tangent bundle are 2n-arrays (dx part, dy part).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fieldspec as fs
from .errors import HomogeneityError, MetricError
from .fieldspec import FieldDef, Point
from .jets import stack

HOMOGENEITY_TOL = 1e-8
ISOTROPY_RIDGE = 1e-12


@dataclass(frozen=True)
class SprayData:
    gamma: np.ndarray
    gamma_j: np.ndarray
    gamma_jk: np.ndarray
    dGamma_dx: np.ndarray
    dGammaj_dx: np.ndarray

    @property
    def n(self) -> int:
        return len(self.gamma)


@dataclass(frozen=True)
class CurvatureData:
    R3: np.ndarray
    R2: np.ndarray


def _require_kind(f: FieldDef, kind: str):
    if f.kind != kind:
        raise ValueError(f"expected a {kind} field, got {f.kind}")


def spray_data(spray: FieldDef, p: Point) -> SprayData:
    _require_kind(spray, "spray")
    n = spray.n
    val, grad, hess, _ = stack(fs.eval_field_jet(spray, p, 2))
    return SprayData(
        gamma=val,
        gamma_j=grad[:, n:],
        gamma_jk=hess[:, n:, n:],
        dGamma_dx=grad[:, :n],
        dGammaj_dx=hess[:, n:, :n],
    )


def spray_vector(sd: SprayData, p: Point) -> np.ndarray:
    """The spray as a tangent vector: (y, -2 G)."""
    return np.concatenate([p.y, -2.0 * sd.gamma])


def liouville_vector(p: Point) -> np.ndarray:
    return np.concatenate([np.zeros(p.n), p.y])


def hlift(sd: SprayData, v) -> np.ndarray:
    """Horizontal lift v^i H_i = v^i d/dx^i - G^j_i v^i d/dy^j."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([v, -sd.gamma_j @ v])


def vlift(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.concatenate([np.zeros_like(v), v])


def horizontal_frame(sd: SprayData) -> np.ndarray:
    """Rows are H_1..H_n followed by V_1..V_n as coordinate vectors."""
    n = sd.n
    H = np.hstack([np.eye(n), -sd.gamma_j.T])
    V = np.hstack([np.zeros((n, n)), np.eye(n)])
    return np.vstack([H, V])


def coframe(sd: SprayData) -> np.ndarray:
    """Rows are dx^1..dx^n followed by phi^j = dy^j + G^j_k dx^k (dual to :func:`horizontal_frame`)."""
    n = sd.n
    dx = np.hstack([np.eye(n), np.zeros((n, n))])
    phi = np.hstack([sd.gamma_j, np.eye(n)])
    return np.vstack([dx, phi])


def curvature_from_data(sd: SprayData, y) -> CurvatureData:
    # H_i(G^l_j) = d_i G^l_j - G^k_i G^l_jk
    HG = sd.dGammaj_dx - np.einsum("ki,ljk->lji", sd.gamma_j, sd.gamma_jk)
    # HG[l, j, i] = H_i(G^l_j);  R^l_ij = H_i(G^l_j) - H_j(G^l_i)
    R3 = np.transpose(HG, (0, 2, 1)) - HG
    R2 = R3 @ np.asarray(y, dtype=float)
    return CurvatureData(R3=R3, R2=R2)


def curvature(spray: FieldDef, p: Point) -> CurvatureData:
    return curvature_from_data(spray_data(spray, p), p.y)


def tensor_derivatives(h, p: Point):
    """Value and first derivatives of a multiplier-like object.

    Returns ``(h, dh)`` with ``dh[a, i, j] = dh_ij/dz^a``.  Accepts a
    sym2tensor :class:`FieldDef` or anything with an ``evaluate(p)`` method
    returning that pair.
    """
    if isinstance(h, FieldDef):
        _require_kind(h, "sym2tensor")
        val, grad, _, _ = stack(fs.eval_field_jet(h, p, 1))
        H = fs.sym_matrix(val, h.n)
        dH = fs.sym_matrix(grad, h.n)  # (n, n, 2n)
        return H, np.moveaxis(dH, -1, 0)
    return h.evaluate(p)


def nabla_from_data(sd: SprayData, y, h: np.ndarray, dh: np.ndarray) -> np.ndarray:
    """(nabla h)_ij = G(h_ij) - G^k_i h_kj - G^k_j h_ik."""
    gvec = np.concatenate([np.asarray(y, dtype=float), -2.0 * sd.gamma])
    along = np.einsum("a,aij->ij", gvec, dh)
    return along - sd.gamma_j.T @ h - h @ sd.gamma_j


def dyn_cov_deriv(spray: FieldDef, h, p: Point) -> np.ndarray:
    """Dynamical covariant derivative of a (0,2) tensor along the spray."""
    H, dH = tensor_derivatives(h, p)
    return nabla_from_data(spray_data(spray, p), p.y, H, dH)


# -- homogeneity and projective changes -------------------------------------


def probe_points(n: int, count: int = 8, seed: int = 20240601) -> list[Point]:
    """Deterministic probe points: x in [-1, 1]^n, unit fibre directions."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        y = rng.normal(size=n)
        out.append(Point(rng.uniform(-1, 1, n), y / np.linalg.norm(y)))
    return out


def homogeneity_residual(f: FieldDef, degree: float, p: Point, scales=(0.5, 2.0)) -> float:
    """max over scales s and components of |f(x, s y) - s^degree f(x, y)|."""
    base = fs.eval_field(f, p)
    worst = 0.0
    for s in scales:
        if s <= 0:
            raise ValueError("scales must be positive")
        scaled = fs.eval_field(f, p.scaled(s))
        worst = max(worst, float(np.max(np.abs(scaled - s**degree * base))))
    return worst


def _check_homogeneous(f: FieldDef, degree: float, what: str, probes=None):
    for q in probes or probe_points(f.n):
        r = homogeneity_residual(f, degree, q)
        scale = max(1.0, float(np.max(np.abs(fs.eval_field(f, q)))))
        if r > HOMOGENEITY_TOL * scale:
            raise HomogeneityError(f"{what} is not positively homogeneous of degree {degree}: residual {r:.3e} at {q}")


def _fibre_vars(n):
    return [fs.Var(f"y{i + 1}") for i in range(n)]


def projective_transform(spray: FieldDef, P: FieldDef, probes=None) -> FieldDef:
    """The spray G - 2 P Delta, i.e. coefficients G^i + P y^i."""
    _require_kind(spray, "spray")
    _require_kind(P, "scalar")
    if P.n != spray.n:
        raise ValueError("spray and projective factor live on different dimensions")
    _check_homogeneous(P, 1.0, "projective factor P", probes)
    p_expr = P.exprs[0]
    exprs = [fs.add(g, fs.mul(p_expr, yi)) for g, yi in zip(spray.exprs, _fibre_vars(spray.n))]
    return fs.from_exprs("spray", spray.n, exprs)


def norm_expr(n: int, metric: FieldDef | None = None) -> fs.Expr:
    """G = sqrt(g_ij y^i y^j) as an expression (Euclidean when ``metric`` is None)."""
    ys = _fibre_vars(n)
    if metric is None:
        quad = fs.total(fs.Pow(y, 2) for y in ys)
    else:
        terms = []
        for i in range(n):
            for j in range(n):
                gij = metric.component(f"{min(i, j) + 1}{max(i, j) + 1}")
                terms.append(fs.mul(gij, fs.mul(ys[i], ys[j])))
        quad = fs.total(terms)
    return fs.Call("sqrt", (quad,))


def normalize_semispray(z: FieldDef, g: FieldDef, probes=None) -> FieldDef:
    """Add the multiple f Delta, f = -z(G)/G, that makes the metric norm G a first integral.

    ``z`` holds the coefficients of a second-order field y d/dx - 2 z^i d/dy;
    ``g`` is a metric g_ij(x).  The result has coefficients z^i + z(G) y^i / (2G).
    """
    _require_kind(z, "spray")
    _require_kind(g, "sym2tensor")
    n = z.n
    for q in probes or probe_points(n):
        gm = fs.sym_matrix(fs.eval_field(g, q), n)
        if np.min(np.linalg.eigvalsh(gm)) <= 0:
            raise MetricError(f"metric is not positive definite at x={q.x.tolist()}")
    G = norm_expr(n, g)
    zG = fs.ZERO
    for k in range(n):
        zG = fs.add(zG, fs.mul(fs.Var(f"y{k + 1}"), fs.diff(G, f"x{k + 1}")))
        zG = fs.sub(zG, fs.mul(fs.mul(fs.num(2), z.exprs[k]), fs.diff(G, f"y{k + 1}")))
    factor = fs.div(zG, fs.mul(fs.num(2), G))
    exprs = [fs.add(zk, fs.mul(factor, yk)) for zk, yk in zip(z.exprs, _fibre_vars(n))]
    return fs.from_exprs("spray", n, exprs)


def isotropy_residual(spray: FieldDef, p: Point):
    """Least-squares fit R^i_j ~ lam delta^i_j + mu_j y^i.

    Returns ``(lam, mu, residual)`` with the Frobenius norm of the misfit.
    """
    R2 = curvature(spray, p).R2
    return isotropy_fit(R2, p.y)


def isotropy_fit(R2: np.ndarray, y) -> tuple:
    y = np.asarray(y, dtype=float)
    n = len(y)
    A = np.zeros((n * n, 1 + n))
    for i in range(n):
        for j in range(n):
            row = i * n + j
            A[row, 0] = 1.0 if i == j else 0.0
            A[row, 1 + j] = y[i]
    b = R2.reshape(-1)
    coef = np.linalg.solve(A.T @ A + ISOTROPY_RIDGE * np.eye(1 + n), A.T @ b)
    residual = float(np.linalg.norm(A @ coef - b))
    return float(coef[0]), coef[1:], residual
