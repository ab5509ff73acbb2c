"""Pointwise metrizability conditions for a projective class of sprays.

Certificates come in four flavours: a multiplier h_ij, a semi-basic 1-form
theta_i, a 2-form omega on the slit tangent bundle, or a Finsler function F
from which the other three are derived (h = fibre Hessian of F, theta =
dF/dy, omega = -d theta).

Two-forms are handled as antisymmetric 2n x 2n matrices of their values on
coordinate basis vectors, ``M[a, b] = omega(e_a, e_b)``; derivatives are
stored as ``dM[c, a, b] = dM_ab/dz^c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import fieldspec as fs
from . import spray as sp
from .errors import AnnihilationError, DomainError
from .fieldspec import FieldDef, Point
from .jets import stack

DEFAULT_TOL = 1e-8
RANK_RTOL = 1e-8
ANNIHILATION_TOL = 1e-8
SIGN_TOL = 1e-10
_TINY = np.finfo(float).tiny


# -- reports ------------------------------------------------------------------


@dataclass(frozen=True)
class Entry:
    """One named residual. ``passed`` is defined as ``residual <= tolerance``."""

    name: str
    residual: float
    tolerance: float
    relative: float = 0.0
    value: float | None = None

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "residual": float(self.residual),
            "relative": float(self.relative),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
        }
        if self.value is not None:
            out["value"] = float(self.value)
        return out


@dataclass(frozen=True)
class ConditionReport:
    point: Point
    suite: str
    entries: tuple
    flags: tuple = ()

    @property
    def aggregate(self) -> float:
        return max((e.residual for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name: str) -> Entry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def failures(self) -> list[Entry]:
        return [e for e in self.entries if not e.passed]

    def to_dict(self) -> dict:
        out = {
            "point": {"x": self.point.x.tolist(), "y": self.point.y.tolist()},
            "suite": self.suite,
            "entries": [e.to_dict() for e in self.entries],
        }
        if self.flags:
            out["flags"] = list(self.flags)
        return out


def _entry(name, residual, scale, tol, value=None) -> Entry:
    residual = float(residual)
    return Entry(name, residual, float(tol), residual / max(float(scale), _TINY) if residual else 0.0, value)


def _positivity_entry(name, value) -> Entry:
    # residual 0 iff value > 0, strictly positive otherwise
    residual = 0.0 if value > 0 else -value + _TINY
    return Entry(name, residual, 0.0, residual / max(abs(value), _TINY) if residual else 0.0, float(value))


def _amax(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def numerical_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


# -- certificates ---------------------------------------------------------------


class Multiplier:
    """A symmetric (0,2) tensor h_ij(x, y), from a tensor field or as a fibre Hessian."""

    def __init__(self, field: FieldDef | None = None, finsler: FieldDef | None = None, oneform=None):
        if sum(a is not None for a in (field, finsler, oneform)) != 1:
            raise ValueError("give exactly one of field, finsler, oneform")
        if field is not None and field.kind != "sym2tensor":
            raise ValueError("multiplier field must be a sym2tensor")
        if finsler is not None and finsler.kind != "scalar":
            raise ValueError("Finsler function must be a scalar field")
        self.field = field
        self.finsler = finsler
        self.oneform = oneform
        self.n = (field or finsler or oneform).n

    @classmethod
    def from_field(cls, f: FieldDef) -> "Multiplier":
        return cls(field=f)

    @classmethod
    def from_finsler(cls, F: FieldDef) -> "Multiplier":
        return cls(finsler=F)

    @classmethod
    def from_oneform(cls, theta: "OneForm") -> "Multiplier":
        """h_ij = V_i(theta_j), symmetrized."""
        return cls(oneform=theta)

    def value(self, p: Point) -> np.ndarray:
        n = self.n
        if self.finsler is not None:
            j = fs.eval_field_jet(self.finsler, p, 2)[0]
            return j.hess[n:, n:].copy()
        if self.oneform is not None:
            _, dth = self.oneform.evaluate(p, 1)
            h = dth[n:, :]
            return 0.5 * (h + h.T)
        return fs.sym_matrix(fs.eval_field(self.field, p), n)

    def evaluate(self, p: Point):
        """``(h, dh)`` with ``dh[a, i, j] = dh_ij/dz^a`` over all 2n coordinates."""
        n = self.n
        if self.finsler is not None:
            j = fs.eval_field_jet(self.finsler, p, 3, dirs=tuple(range(2 * n)))[0]
            return j.hess[n:, n:].copy(), j.third[:, n:, n:].copy()
        if self.oneform is not None:
            _, dth, d2th = self.oneform.evaluate(p, 2)
            h = dth[n:, :]
            dh = d2th[:, n:, :]
            return 0.5 * (h + h.T), 0.5 * (dh + np.transpose(dh, (0, 2, 1)))
        return sp.tensor_derivatives(self.field, p)


class OneForm:
    """A semi-basic 1-form theta = theta_i dx^i."""

    def __init__(self, field: FieldDef | None = None, finsler: FieldDef | None = None):
        if (field is None) == (finsler is None):
            raise ValueError("give exactly one of field, finsler")
        if field is not None and field.kind != "covector":
            raise ValueError("1-form field must be a covector")
        if finsler is not None and finsler.kind != "scalar":
            raise ValueError("Finsler function must be a scalar field")
        self.field = field
        self.finsler = finsler
        self.n = (field or finsler).n

    @classmethod
    def from_field(cls, f: FieldDef) -> "OneForm":
        return cls(field=f)

    @classmethod
    def hilbert(cls, F: FieldDef) -> "OneForm":
        return cls(finsler=F)

    def evaluate(self, p: Point, order: int = 1):
        """theta (n,), then dtheta[a, i] = d theta_i / dz^a, then d2theta[a, b, i] when order is 2."""
        n = self.n
        if self.finsler is not None:
            if order >= 2:
                j = fs.eval_field_jet(self.finsler, p, 3, dirs=tuple(range(2 * n)))[0]
                return j.grad[n:].copy(), j.hess[:, n:].copy(), j.third[:, :, n:].copy()
            j = fs.eval_field_jet(self.finsler, p, max(order + 1, 1))[0]
            if order == 0:
                return j.grad[n:].copy()
            return j.grad[n:].copy(), j.hess[:, n:].copy()
        val, grad, hess, _ = stack(fs.eval_field_jet(self.field, p, order)) if order else (fs.eval_field(self.field, p), None, None, None)
        if order == 0:
            return val
        if order == 1:
            return val, grad.T.copy()
        return val, grad.T.copy(), np.transpose(hess, (1, 2, 0)).copy()


def _as_multiplier(h) -> Multiplier:
    if isinstance(h, Multiplier):
        return h
    if isinstance(h, FieldDef):
        return Multiplier.from_field(h) if h.kind == "sym2tensor" else Multiplier.from_finsler(h)
    if isinstance(h, OneForm):
        return Multiplier.from_oneform(h)
    raise TypeError(f"cannot use {type(h).__name__} as a multiplier")


def _as_oneform(theta) -> OneForm:
    if isinstance(theta, OneForm):
        return theta
    if isinstance(theta, FieldDef):
        return OneForm.from_field(theta) if theta.kind == "covector" else OneForm.hilbert(theta)
    raise TypeError(f"cannot use {type(theta).__name__} as a 1-form")


def hessian_of_scalar(F: FieldDef, p: Point) -> np.ndarray:
    """Fibre Hessian d2F/dy^i dy^j."""
    return Multiplier.from_finsler(F).value(p)


def hilbert_oneform(F: FieldDef, p: Point) -> np.ndarray:
    """Components dF/dy^i of the Hilbert 1-form."""
    return OneForm.hilbert(F).evaluate(p, 0)


def f_from_theta(theta, p: Point) -> float:
    """i_Gamma theta = theta_i y^i."""
    return float(_as_oneform(theta).evaluate(p, 0) @ p.y)


# -- Helmholtz conditions ----------------------------------------------------------


def helmholtz_from_data(sd: sp.SprayData, p: Point, h: np.ndarray, dh: np.ndarray, tol: float = DEFAULT_TOL,
                        suite: str = "helmholtz") -> ConditionReport:
    n = p.n
    y = p.y
    curv = sp.curvature_from_data(sd, y)
    hmag = _amax(h)

    sym = _amax(h - h.T)
    hy = h @ y
    annihilates = float(np.linalg.norm(hy))
    dv = dh[n:]  # dv[k, i, j] = d h_ij / dy^k
    fibre = _amax(dv - np.transpose(dv, (2, 1, 0)))  # d_k h_ij - d_j h_ik
    nab = sp.nabla_from_data(sd, y, h, dh)
    along = np.einsum("a,aij->ij", np.concatenate([y, -2.0 * sd.gamma]), dh)
    hR = h @ curv.R2
    csym = _amax(hR - hR.T)
    # cyclic sum over (i, j, k) of R^l_jk h_il
    Rh = np.einsum("ljk,il->ijk", curv.R3, h)
    cyc = Rh + np.transpose(Rh, (1, 2, 0)) + np.transpose(Rh, (2, 0, 1))

    entries = (
        _entry("sym", sym, hmag, tol),
        _entry("annihilates_y", annihilates, hmag * np.linalg.norm(y), tol),
        _entry("fibre_symmetry", fibre, _amax(dv), tol),
        _entry("nabla", _amax(nab), max(_amax(along), _amax(sd.gamma_j.T @ h), _amax(h @ sd.gamma_j)), tol),
        _entry("curvature_sym", csym, _amax(hR), tol),
        _entry("cyclic_curvature", _amax(cyc), _amax(Rh), tol),
    )
    return ConditionReport(p, suite, entries)


def helmholtz_residuals(spray: FieldDef, h, p: Point, tol: float = DEFAULT_TOL) -> ConditionReport:
    """Residuals of the five Helmholtz conditions, plus the cyclic curvature form."""
    H, dH = _as_multiplier(h).evaluate(p)
    return helmholtz_from_data(sp.spray_data(spray, p), p, H, dH, tol)


# -- Bucataru-Muzsnay conditions ----------------------------------------------------


def hilbert_matrix(theta: np.ndarray, dtheta: np.ndarray) -> np.ndarray:
    """Value matrix of d(theta_i dx^i) from dtheta[a, i] = d theta_i / dz^a."""
    n = len(theta)
    M = np.zeros((2 * n, 2 * n))
    M[:, :n] += dtheta
    M[:n, :] -= dtheta.T
    return M


def bm_from_data(sd: sp.SprayData, p: Point, theta: np.ndarray, dtheta: np.ndarray, tol: float = DEFAULT_TOL,
                 suite: str = "bm") -> ConditionReport:
    n = p.n
    y = p.y
    dx, dy = dtheta[:n], dtheta[n:]  # dx[k, i] = d theta_i / dx^k
    lie = dy.T @ y  # y^j d theta_i / dy^j
    dJ = _amax(dy - dy.T)
    # H_k(theta_i) = d_k theta_i - G^l_k V_l(theta_i)
    Htheta = dx - sd.gamma_j.T @ dy
    dH = _amax(Htheta - Htheta.T)
    M = hilbert_matrix(theta, dtheta)
    rank = numerical_rank(M)
    target = 2 * n - 2
    F = float(theta @ y)
    entries = (
        _entry("lie_delta", _amax(lie), _amax(dy) * np.linalg.norm(y), tol),
        _entry("dJ", dJ, _amax(dy), tol),
        _entry("dH", dH, max(_amax(dx), _amax(sd.gamma_j.T @ dy)), tol),
        Entry("rank_dtheta", float(abs(rank - target)), 0.0, float(abs(rank - target)) / target if target else 0.0,
              float(rank)),
        _positivity_entry("positivity", F),
    )
    return ConditionReport(p, suite, entries)


def bm_residuals(spray: FieldDef, theta, p: Point, tol: float = DEFAULT_TOL) -> ConditionReport:
    """Differential and algebraic conditions on a semi-basic 1-form."""
    th, dth = _as_oneform(theta).evaluate(p, 1)
    return bm_from_data(sp.spray_data(spray, p), p, th, dth, tol)


# -- two-forms ------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoFormValue:
    """A 2-form at a point split into blocks.

    ``A[i, j] = omega(X_i, X_j)``, ``B[i, j] = omega(X_i, Y_j)``,
    ``C[i, j] = omega(Y_i, Y_j)`` where (X, Y) is either the coordinate basis
    (d/dx, d/dy) or, when ``frame_adapted``, the horizontal frame (H, V).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    frame_adapted: bool = False

    @classmethod
    def from_matrix(cls, M: np.ndarray, frame_adapted: bool = False) -> "TwoFormValue":
        n = M.shape[0] // 2
        return cls(M[:n, :n].copy(), M[:n, n:].copy(), M[n:, n:].copy(), frame_adapted)

    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [-self.B.T, self.C]])

    def to_coordinates(self, gamma_j: np.ndarray) -> "TwoFormValue":
        if not self.frame_adapted:
            return self
        n = len(gamma_j)
        # d/dx^i = H_i + G^k_i V_k, d/dy^i = V_i
        T = np.block([[np.eye(n), np.zeros((n, n))], [gamma_j, np.eye(n)]])
        return TwoFormValue.from_matrix(T.T @ self.matrix() @ T, False)

    def to_frame(self, gamma_j: np.ndarray) -> "TwoFormValue":
        if self.frame_adapted:
            return self
        n = len(gamma_j)
        T = np.block([[np.eye(n), np.zeros((n, n))], [-gamma_j, np.eye(n)]])
        return TwoFormValue.from_matrix(T.T @ self.matrix() @ T, True)

    def __call__(self, X, Y) -> float:
        return float(np.asarray(X) @ self.matrix() @ np.asarray(Y))


class KahlerLift(NamedTuple):
    frame: TwoFormValue
    coordinates: TwoFormValue


def kahler_matrix(h: np.ndarray, gamma_j: np.ndarray) -> np.ndarray:
    """Coordinate value matrix of h_ij dx^i ^ phi^j, phi^j = dy^j + G^j_k dx^k."""
    hg = h @ gamma_j
    return np.block([[hg - hg.T, h], [-h.T, np.zeros_like(h)]])


def _check_annihilation(h, y, tol=ANNIHILATION_TOL):
    r = float(np.linalg.norm(h @ y))
    if r > tol * max(1.0, _amax(h)):
        raise AnnihilationError(f"|h y| = {r:.3e} exceeds {tol:g}; h does not annihilate y")


def kahler_lift(spray: FieldDef, h, p: Point) -> KahlerLift:
    """The 2-form h_ij dx^i ^ phi^j, in the horizontal frame and in coordinates."""
    H = _as_multiplier(h).value(p) if not isinstance(h, np.ndarray) else np.asarray(h, dtype=float)
    _check_annihilation(H, p.y)
    sd = sp.spray_data(spray, p)
    n = p.n
    frame = TwoFormValue(np.zeros((n, n)), H.copy(), np.zeros((n, n)), True)
    return KahlerLift(frame, TwoFormValue.from_matrix(kahler_matrix(H, sd.gamma_j)))


class TwoFormField:
    """A 2-form field that can report its value matrix and first derivatives."""

    n: int

    def evaluate(self, p: Point):
        raise NotImplementedError

    def value(self, p: Point) -> np.ndarray:
        return self.evaluate(p)[0]

    def __neg__(self):
        return Scaled(self, -1.0)


class FieldTwoForm(TwoFormField):
    """A 2-form read from a ``twoform`` :class:`FieldDef`."""

    def __init__(self, f: FieldDef):
        if f.kind != "twoform":
            raise ValueError("expected a twoform field")
        self.field = f
        self.n = f.n

    def _assemble(self, comps):
        n = self.n
        comps = np.asarray(comps)
        M = np.zeros((2 * n, 2 * n) + comps.shape[1:])
        for label, c in zip(self.field.labels, comps):
            block, i, j = label[0], int(label[1]) - 1, int(label[2]) - 1
            a, b = {"a": (i, j), "b": (i, n + j), "c": (n + i, n + j)}[block]
            M[a, b] = c
            M[b, a] = -c
        return M

    def evaluate(self, p: Point):
        val, grad, _, _ = stack(fs.eval_field_jet(self.field, p, 1))
        return self._assemble(val), np.moveaxis(self._assemble(grad), -1, 0)

    def value(self, p: Point):
        return self._assemble(fs.eval_field(self.field, p))


class KahlerForm(TwoFormField):
    """The Kahler lift of a multiplier as a field (spray-dependent)."""

    def __init__(self, spray: FieldDef, h):
        self.spray = spray
        self.multiplier = _as_multiplier(h)
        self.n = spray.n

    def evaluate(self, p: Point):
        n = self.n
        h, dh = self.multiplier.evaluate(p)
        _, grad, hess, _ = stack(fs.eval_field_jet(self.spray, p, 2))
        gj = grad[:, n:]
        dgj = np.transpose(hess[:, n:, :], (2, 0, 1))  # dgj[a, k, i] = d G^k_i / dz^a
        M = kahler_matrix(h, gj)
        dhg = np.einsum("aij,jk->aik", dh, gj) + np.einsum("ij,ajk->aik", h, dgj)
        dM = np.zeros((2 * n, 2 * n, 2 * n))
        dM[:, :n, :n] = dhg - np.transpose(dhg, (0, 2, 1))
        dM[:, :n, n:] = dh
        dM[:, n:, :n] = -np.transpose(dh, (0, 2, 1))
        return M, dM

    def value(self, p: Point):
        sd = sp.spray_data(self.spray, p)
        return kahler_matrix(self.multiplier.value(p), sd.gamma_j)


class HilbertForm(TwoFormField):
    """d theta for a semi-basic 1-form (the Hilbert 2-form when theta = dF/dy)."""

    def __init__(self, theta):
        self.oneform = _as_oneform(theta)
        self.n = self.oneform.n

    def evaluate(self, p: Point):
        n = self.n
        th, dth, d2th = self.oneform.evaluate(p, 2)
        M = hilbert_matrix(th, dth)
        dM = np.zeros((2 * n, 2 * n, 2 * n))
        dM[:, :, :n] += d2th
        dM[:, :n, :] -= np.transpose(d2th, (0, 2, 1))
        return M, dM

    def value(self, p: Point):
        th, dth = self.oneform.evaluate(p, 1)
        return hilbert_matrix(th, dth)


class Scaled(TwoFormField):
    def __init__(self, form: TwoFormField, c: float):
        self.form = form
        self.c = float(c)
        self.n = form.n

    def evaluate(self, p: Point):
        M, dM = self.form.evaluate(p)
        return self.c * M, self.c * dM

    def value(self, p: Point):
        return self.c * self.form.value(p)


def _as_twoform(omega) -> TwoFormField:
    if isinstance(omega, TwoFormField):
        return omega
    if isinstance(omega, FieldDef) and omega.kind == "twoform":
        return FieldTwoForm(omega)
    raise TypeError(f"cannot use {type(omega).__name__} as a 2-form field")


def _omega_matrix(omega, p: Point) -> np.ndarray:
    if isinstance(omega, TwoFormValue):
        return omega.matrix() if not omega.frame_adapted else None
    if isinstance(omega, np.ndarray):
        return omega
    return _as_twoform(omega).value(p)


def exterior_derivative(dM: np.ndarray) -> np.ndarray:
    """d omega as a totally antisymmetric array: dw[a,b,c] = d_a M_bc + d_b M_ca + d_c M_ab."""
    return dM + np.transpose(dM, (2, 0, 1)) + np.transpose(dM, (1, 2, 0))


def lie_derivative_cartan(M, dM, X, DX) -> np.ndarray:
    """L_X omega = d(i_X omega) + i_X d omega; ``DX[a, c] = dX^a/dz^c``."""
    dalpha_parts = np.einsum("ac,ab->cb", DX, M) + np.einsum("a,cab->cb", X, dM)  # d_c alpha_b
    dalpha = dalpha_parts - dalpha_parts.T
    return dalpha + np.einsum("a,abc->bc", X, exterior_derivative(dM))


def spray_vector_jacobian(sd: sp.SprayData) -> np.ndarray:
    n = sd.n
    DX = np.zeros((2 * n, 2 * n))
    DX[:n, n:] = np.eye(n)
    DX[n:, :n] = -2.0 * sd.dGamma_dx
    DX[n:, n:] = -2.0 * sd.gamma_j
    return DX


def twoform_from_data(sd: sp.SprayData, p: Point, M: np.ndarray, dM: np.ndarray, tol: float = DEFAULT_TOL,
                      suite: str = "twoform") -> ConditionReport:
    n = p.n
    X = sp.spray_vector(sd, p)
    D = sp.liouville_vector(p)
    DX = spray_vector_jacobian(sd)
    frame = sp.horizontal_frame(sd)
    Hrows, Vrows = frame[:n], frame[n:]
    dw = exterior_derivative(dM)
    lie = lie_derivative_cartan(M, dM, X, DX)
    mmag = _amax(M)
    i_gamma = X @ M
    i_delta = D @ M
    entries = (
        _entry("char_gamma", np.linalg.norm(i_gamma), mmag * np.linalg.norm(X), tol),
        _entry("char_delta", np.linalg.norm(i_delta), mmag * np.linalg.norm(D), tol),
        _entry("lie_gamma", _amax(lie), max(_amax(dM) * np.linalg.norm(X), mmag * _amax(DX)), tol),
        _entry("vert_isotropy", _amax(Vrows @ M @ Vrows.T), mmag, tol),
        _entry("dH_vert", _amax(np.einsum("ia,jb,kc,abc->ijk", Hrows, Vrows, Vrows, dw)), _amax(dM), tol),
        _entry("closed", _amax(dw), _amax(dM), tol),
    )
    flags = ()
    if numerical_rank(M) < 2 * n - 2:
        flags = (f"degenerate (rank {numerical_rank(M)})",)
    return ConditionReport(p, suite, entries, flags)


def twoform_residuals(spray: FieldDef, omega, p: Point, tol: float = DEFAULT_TOL) -> ConditionReport:
    """Characteristic-distribution, invariance, isotropy and closedness residuals of a 2-form."""
    M, dM = _as_twoform(omega).evaluate(p)
    return twoform_from_data(sp.spray_data(spray, p), p, M, dM, tol)


def quadratic_form(spray: FieldDef, omega, p: Point, v, isotropy_tol: float = 1e-8) -> float:
    """q(v) = omega(v^h, v^v) with the horizontal lift of ``spray``."""
    sd = sp.spray_data(spray, p)
    if isinstance(omega, TwoFormValue) and omega.frame_adapted:
        omega = omega.to_coordinates(sd.gamma_j)
    M = _omega_matrix(omega, p)
    n = p.n
    C = M[n:, n:]
    if _amax(C) > isotropy_tol * max(1.0, _amax(M)):
        raise DomainError("q is defined only for 2-forms that vanish on pairs of vertical vectors")
    return float(sp.hlift(sd, v) @ M @ sp.vlift(v))


@dataclass(frozen=True)
class QuasiDefiniteness:
    min_eig: float
    max_eig: float
    classification: str
    eigenvalues: np.ndarray = field(repr=False, default=None)


def quasi_definiteness(h, y, threshold: float = SIGN_TOL) -> QuasiDefiniteness:
    """Sign pattern of h restricted to an orthonormal complement of span(y)."""
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    hn = float(np.linalg.norm(h))
    if np.linalg.norm(h @ y) > ANNIHILATION_TOL * hn * max(1.0, np.linalg.norm(y)):
        raise AnnihilationError("h does not annihilate y")
    _, _, vt = np.linalg.svd(y[None, :])
    E = vt[1:]
    eig = np.linalg.eigvalsh(E @ (0.5 * (h + h.T)) @ E.T)
    lo, hi = float(eig.min()), float(eig.max())
    if np.any(np.abs(eig) <= threshold):
        cls = "degenerate"
    elif lo > 0:
        cls = "positive_quasi_definite"
    elif hi < 0:
        cls = "negative_quasi_definite"
    else:
        cls = "indefinite"
    return QuasiDefiniteness(lo, hi, cls, eig)
