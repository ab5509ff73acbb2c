"""Geodesics, Jacobi fields, the conserved pairing, and totally-geodesic tests.

Jacobi fields are integrated as the first-order system

    zeta' = eta - G_j zeta,       eta' = -R zeta - G_j eta,

where eta = nabla zeta = zeta' + G_j zeta and R is the Jacobi endomorphism.
Along the geodesic the vector Z = zeta^h + eta^v has coordinates (zeta, zeta').
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import fieldspec as fs
from . import ode
from . import spray as sp
from .errors import DomainError, StepFailure
from .fieldspec import EPS_FIBRE, FieldDef, Point
from .metrizability import _as_twoform, spray_vector_jacobian

TOL_RANGE = (1e-12, 1e-3)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # rows (x, y)
    stats: dict = field(default_factory=dict)
    solution: ode.Solution | None = field(default=None, repr=False)
    spray: FieldDef | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.states.shape[1] // 2

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, self.n :]

    def point(self, k: int) -> Point:
        return Point(self.x[k], self.y[k])

    def at(self, t: float) -> np.ndarray:
        return self.solution(t)

    def to_csv(self, path, channels=()) -> None:
        """Write columns t, x, y and then zeta, nabla_zeta per channel to a path or open file."""
        n = self.n
        header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
        cols = [self.times[:, None], self.states]
        for c, ch in enumerate(channels):
            tag = "" if len(channels) == 1 else str(c + 1)
            header += [f"zeta{tag}_{i + 1}" for i in range(n)] + [f"nabla_zeta{tag}_{i + 1}" for i in range(n)]
            cols += [ch.zeta, ch.nabla_zeta]
        if hasattr(path, "write"):
            self._write_rows(path, header, np.hstack(cols))
            return
        with open(path, "w", newline="") as fh:
            self._write_rows(fh, header, np.hstack(cols))

    @staticmethod
    def _write_rows(fh, header, rows):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


@dataclass
class JacobiChannel:
    zeta: np.ndarray
    nabla_zeta: np.ndarray
    times: np.ndarray
    geodesic_deviation: float = 0.0  # co-integrated geodesic vs the input trajectory


def _check_tol(tol):
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise ValueError(f"tol must lie in [{TOL_RANGE[0]:g}, {TOL_RANGE[1]:g}], got {tol:g}")


def _fibre_guard(n):
    def check(t, s):
        r = float(np.linalg.norm(s[n : 2 * n]))
        if r < EPS_FIBRE:
            raise StepFailure(f"|y| = {r:.3e} fell below {EPS_FIBRE:g} at t={t:.6g}")
    return check


def _guard_stage(t, s, n):
    # stage states can approach the zero section before an accepted step does
    if np.linalg.norm(s[n : 2 * n]) < EPS_FIBRE:
        raise StepFailure(f"|y| fell below {EPS_FIBRE:g} near t={t:.6g}")


def geodesic_rhs(spray: FieldDef):
    n = spray.n

    def rhs(t, s):
        _guard_stage(t, s, n)
        try:
            return np.concatenate([s[n:], -2.0 * np.array(spray(list(s[: 2 * n])), dtype=float)])
        except DomainError as e:
            raise StepFailure(f"spray not evaluable at t={t:.6g}: {e}") from e
    return rhs


def integrate_geodesic(spray: FieldDef, p0: Point, t_end: float, tol: float = 1e-10, t_eval=None) -> Trajectory:
    """Solve x'' + 2 G(x, x') = 0 from p0 over [0, t_end]."""
    _check_tol(tol)
    if spray.kind != "spray":
        raise ValueError("expected a spray field")
    n = spray.n
    sol = ode.solve(geodesic_rhs(spray), (0.0, t_end), p0.z, rtol=tol, atol=tol, t_eval=t_eval,
                    check=_fibre_guard(n))
    stats = {"accepted": sol.n_accepted, "rejected": sol.n_rejected, "evals": sol.n_evals,
             "max_error_ratio": sol.max_error}
    return Trajectory(sol.t, sol.y, stats, sol, spray)


def _jacobi_rhs(spray: FieldDef):
    n = spray.n

    def rhs(t, s):
        _guard_stage(t, s, n)
        p = Point(s[:n], s[n : 2 * n])
        sd = sp.spray_data(spray, p)
        R = sp.curvature_from_data(sd, p.y).R2
        zeta, eta = s[2 * n : 3 * n], s[3 * n :]
        return np.concatenate([
            p.y, -2.0 * sd.gamma,
            eta - sd.gamma_j @ zeta,
            -R @ zeta - sd.gamma_j @ eta,
        ])
    return rhs


def integrate_jacobi(spray: FieldDef, traj: Trajectory, zeta0, nabla_zeta0, tol: float | None = None) -> JacobiChannel:
    """Jacobi field along ``traj`` with zeta(0) = zeta0 and (nabla zeta)(0) = nabla_zeta0."""
    n = spray.n
    zeta0 = np.asarray(zeta0, dtype=float)
    nabla_zeta0 = np.asarray(nabla_zeta0, dtype=float)
    if zeta0.shape != (n,) or nabla_zeta0.shape != (n,):
        raise ValueError("initial Jacobi data must be n-vectors")
    tol = tol if tol is not None else 1e-10
    _check_tol(tol)
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    s0 = np.concatenate([traj.states[0], zeta0, nabla_zeta0])
    sol = ode.solve(_jacobi_rhs(spray), (t0, t1), s0, rtol=tol, atol=tol, t_eval=traj.times,
                    check=_fibre_guard(n))
    dev = float(np.max(np.abs(sol.y[:, : 2 * n] - traj.states)))
    return JacobiChannel(sol.y[:, 2 * n : 3 * n].copy(), sol.y[:, 3 * n :].copy(), sol.t, dev)


def jacobi_vector(sd: sp.SprayData, zeta, nabla_zeta) -> np.ndarray:
    """Z = zeta^h + (nabla zeta)^v as a coordinate tangent vector."""
    return sp.hlift(sd, zeta) + sp.vlift(nabla_zeta)


def pairing_series(spray: FieldDef, omega, traj: Trajectory, ch1: JacobiChannel, ch2: JacobiChannel) -> np.ndarray:
    form = _as_twoform(omega)
    out = np.empty(len(traj.times))
    for k in range(len(traj.times)):
        p = traj.point(k)
        sd = sp.spray_data(spray, p)
        Z1 = jacobi_vector(sd, ch1.zeta[k], ch1.nabla_zeta[k])
        Z2 = jacobi_vector(sd, ch2.zeta[k], ch2.nabla_zeta[k])
        out[k] = Z1 @ form.value(p) @ Z2
    return out


def pairing_constancy(spray: FieldDef, omega, traj: Trajectory, ch1: JacobiChannel, ch2: JacobiChannel) -> float:
    """max_t |omega(Z1, Z2)(t) - omega(Z1, Z2)(0)|."""
    s = pairing_series(spray, omega, traj, ch1, ch2)
    return float(np.max(np.abs(s - s[0])))


# -- Lie transport -----------------------------------------------------------------


def _variational_rhs(spray: FieldDef):
    n = spray.n

    def rhs(t, s):
        p = Point(s[:n], s[n : 2 * n])
        sd = sp.spray_data(spray, p)
        DX = spray_vector_jacobian(sd)
        return np.concatenate([p.y, -2.0 * sd.gamma, DX @ s[2 * n :]])
    return rhs


def pushforward(spray: FieldDef, p: Point, v, dt: float, tol: float = 1e-12):
    """(phi_dt(p), d phi_dt v) for the geodesic flow, from the variational equation."""
    n = spray.n
    s0 = np.concatenate([p.z, np.asarray(v, dtype=float)])
    sol = ode.solve(_variational_rhs(spray), (0.0, dt), s0, rtol=tol, atol=tol)
    return sol.y[-1, : 2 * n], sol.y[-1, 2 * n :]


def lie_transport_residual(spray: FieldDef, traj: Trajectory, ch: JacobiChannel, dt: float = 1e-3,
                           indices=None) -> float:
    """max over sampled times of |(d phi_dt Z(t) - Z(t + dt)) / dt|.

    Z is rebuilt at t + dt from a fresh Jacobi integration over [t, t + dt],
    so the two sides come from independent computations.
    """
    n = spray.n
    idx = range(len(traj.times)) if indices is None else indices
    worst = 0.0
    for k in idx:
        p = traj.point(k)
        sd = sp.spray_data(spray, p)
        Z = jacobi_vector(sd, ch.zeta[k], ch.nabla_zeta[k])
        _, pushed = pushforward(spray, p, Z, dt)
        s0 = np.concatenate([p.z, ch.zeta[k], ch.nabla_zeta[k]])
        s1 = ode.solve(_jacobi_rhs(spray), (0.0, dt), s0, rtol=1e-12, atol=1e-12).y[-1]
        p1 = Point(s1[:n], s1[n : 2 * n])
        Z1 = jacobi_vector(sp.spray_data(spray, p1), s1[2 * n : 3 * n], s1[3 * n :])
        worst = max(worst, float(np.linalg.norm(pushed - Z1)) / dt)
    return worst


# -- reparametrization -------------------------------------------------------------


def arclength_resample(traj: Trajectory, count: int = 4000, s_max: float | None = None, fine: int = 20000):
    """Points of the base curve at equally spaced arc length, from the dense output."""
    ts = np.linspace(traj.times[0], traj.times[-1], fine)
    xs = np.array([traj.at(t)[: traj.n] for t in ts])
    seg = np.linalg.norm(np.diff(xs, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    s_max = s[-1] if s_max is None else min(s_max, s[-1])
    targets = np.linspace(0.0, s_max, count)
    t_at = np.interp(targets, s, ts)
    return np.array([traj.at(t)[: traj.n] for t in t_at]), float(s[-1])


def _point_to_polyline(P, Q):
    a, b = Q[:-1], Q[1:]
    d = b - a
    L2 = np.maximum(np.einsum("ij,ij->i", d, d), 1e-300)
    out = np.empty(len(P))
    for k, pt in enumerate(P):
        s = np.clip(np.einsum("ij,ij->i", pt - a, d) / L2, 0.0, 1.0)
        out[k] = np.min(np.linalg.norm(a + s[:, None] * d - pt, axis=1))
    return out


def hausdorff_distance(P: np.ndarray, Q: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two polylines (points to segments)."""
    return float(max(_point_to_polyline(P, Q).max(), _point_to_polyline(Q, P).max()))


def path_distance(traj_a: Trajectory, traj_b: Trajectory, count: int = 2000) -> float:
    """Hausdorff distance of two traced paths over their common arc length."""
    _, la = arclength_resample(traj_a, 2)
    _, lb = arclength_resample(traj_b, 2)
    s = min(la, lb)
    A, _ = arclength_resample(traj_a, count, s)
    Bc, _ = arclength_resample(traj_b, count, s)
    return hausdorff_distance(A, Bc)


# -- totally geodesic subspaces -------------------------------------------------------


@dataclass(frozen=True)
class AffineSubspace:
    origin: np.ndarray
    basis: np.ndarray  # rows span the tangent directions

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float)
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if b.shape[0] < 1 or b.shape[1] != len(o):
            raise ValueError("subspace basis must have at least one row of length n")
        if np.linalg.matrix_rank(b) < b.shape[0]:
            raise ValueError("subspace basis is linearly dependent")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "basis", b)

    @property
    def projector(self) -> np.ndarray:
        q, _ = np.linalg.qr(self.basis.T)
        return q @ q.T


def tangency_residual(spray: FieldDef, sub: AffineSubspace, x, y) -> float:
    """Norm of the component of -2 G(x, y) normal to the subspace."""
    p = Point(x, y)
    acc = -2.0 * np.atleast_1d(fs.eval_field(spray, p))
    return float(np.linalg.norm(acc - sub.projector @ acc))


def totally_geodesic_residual(spray: FieldDef, sub: AffineSubspace, samples: int = 64, seed: int = 0,
                              extent: float = 1.0) -> float:
    """max over sampled x in the subspace and unit y tangent to it of :func:`tangency_residual`."""
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    k = sub.basis.shape[0]
    worst = 0.0
    for _ in range(samples):
        x = sub.origin + rng.uniform(-extent, extent, k) @ sub.basis
        y = rng.normal(size=k) @ sub.basis
        norm = np.linalg.norm(y)
        if norm < EPS_FIBRE:
            raise DomainError("sampled a vanishing tangent direction")
        worst = max(worst, tangency_residual(spray, sub, x, y / norm))
    return worst
