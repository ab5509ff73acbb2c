"""Almost Grassmann data on the volume-weighted bundle.

Evaluation happens in the chart with the weight coordinate frozen to 1, so
the fibre coordinates u^i coincide numerically with y^i.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import spray as sp
from .fieldspec import FieldDef, Point
from .metrizability import (ConditionReport, Entry, _amax, _as_multiplier, _check_annihilation, _entry)

ISOTROPY_TOL = 1e-10
DEFINITE_FLOOR = 1e-10


@dataclass(frozen=True)
class GrassmannFrame:
    theta1: np.ndarray  # rows dx^i as covectors on (x, u)
    theta2: np.ndarray  # rows du^i + N^i_j dx^j
    K: np.ndarray  # rows K_i = d/dx^i - N^j_i d/du^j
    trace_conn: np.ndarray  # G_i = dG^k_k / du^i
    N: np.ndarray  # N^i_j = G^i_j - u^i G_j / (n + 1)

    @property
    def n(self) -> int:
        return len(self.trace_conn)

    def duality_residual(self) -> float:
        n = self.n
        return max(_amax(self.theta1 @ self.K.T - np.eye(n)), _amax(self.theta2 @ self.K.T))


def frame_from_data(sd: sp.SprayData, u: np.ndarray) -> GrassmannFrame:
    n = sd.n
    trace = np.einsum("kki->i", sd.gamma_jk)
    N = sd.gamma_j - np.outer(u, trace) / (n + 1)
    theta1 = np.hstack([np.eye(n), np.zeros((n, n))])
    theta2 = np.hstack([N, np.eye(n)])
    K = np.hstack([np.eye(n), -N.T])
    return GrassmannFrame(theta1, theta2, K, trace, N)


def grassmann_frame(spray: FieldDef, p: Point) -> GrassmannFrame:
    """Trace connection, adapted coframe and horizontal vectors at the weighted point (x, u)."""
    return frame_from_data(sp.spray_data(spray, p), p.y)


def varpi_matrix(h: np.ndarray, N: np.ndarray) -> np.ndarray:
    """Value matrix of h_ij dx^i ^ theta_2^j on coordinate vectors (d/dx, d/du)."""
    hN = h @ N
    return np.block([[hN - hN.T, h], [-h.T, np.zeros_like(h)]])


def sphere_grid(basis: np.ndarray, steps: int = 2) -> np.ndarray:
    """Unit vectors in the span of ``basis`` rows from the integer lattice {-steps..steps}^k, one per +-pair."""
    k = basis.shape[0]
    out = []
    for c in itertools.product(range(-steps, steps + 1), repeat=k):
        c = np.array(c, dtype=float)
        first = np.flatnonzero(c)
        if first.size == 0 or c[first[0]] < 0:
            continue
        v = c @ basis
        out.append(v / np.linalg.norm(v))
    return np.array(out)


def _complement(u: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(u[None, :])
    return vt[1:]


def segre_checks(spray: FieldDef, h, p: Point, tol: float = ISOTROPY_TOL, grid_steps: int = 2) -> ConditionReport:
    """Isotropy of the Segre-cone generators and the sign pattern of h on two-planes."""
    n = p.n
    u = p.y
    H = np.asarray(h, dtype=float) if isinstance(h, np.ndarray) else _as_multiplier(h).value(p)
    _check_annihilation(H, u)
    sd = sp.spray_data(spray, p)
    fr = frame_from_data(sd, u)
    W = varpi_matrix(H, fr.N)
    hmag = _amax(H)

    horiz = _amax(fr.K @ W @ fr.K.T)
    Vrows = np.hstack([np.zeros((n, n)), np.eye(n)])
    vert = _amax(Vrows @ W @ Vrows.T)
    G = np.concatenate([u, -2.0 * sd.gamma])
    D = np.concatenate([np.zeros(n), u])
    charD = max(float(np.linalg.norm(G @ W)), float(np.linalg.norm(D @ W)))

    dirs = sphere_grid(_complement(u), grid_steps)
    vals = np.array([(v @ fr.K) @ W @ (v @ Vrows) for v in dirs])
    pos, neg = vals[vals > DEFINITE_FLOOR], vals[vals < -DEFINITE_FLOOR]
    smallest = float(np.min(np.abs(vals)))
    # mixed signs win over null directions, which an indefinite h always has
    if pos.size and neg.size:
        sign = "indefinite"
    elif smallest <= DEFINITE_FLOOR:
        sign = "degenerate"
    else:
        sign = "positive" if pos.size else "negative"
    minority = pos if pos.size < neg.size else neg
    # zero iff every generator value is at least the floor in size and all share one sign
    resid = max(0.0, DEFINITE_FLOOR - smallest) + (float(np.max(np.abs(minority))) if minority.size else 0.0)
    defin = Entry("two_plane_definiteness", resid, 0.0, resid / max(hmag, 1e-300) if resid else 0.0, smallest)

    entries = (
        _entry("horiz_isotropy", horiz, hmag * _amax(fr.K) ** 2, tol),
        _entry("vert_isotropy", vert, hmag, tol),
        _entry("char_D", charD, hmag * np.linalg.norm(G), tol),
        defin,
    )
    flags = [f"two_plane_sign={sign}"]
    if hmag == 0.0:
        flags.append("degenerate")
    return ConditionReport(p, "grassmann", entries, tuple(flags))


def generator_value(h: np.ndarray, fr: GrassmannFrame, v, a, b, c, d) -> float:
    """varpi(a v^h + b v^v, c v^h + d v^v)."""
    n = fr.n
    v = np.asarray(v, dtype=float)
    hv = v @ fr.K
    vv = np.concatenate([np.zeros(n), v])
    W = varpi_matrix(h, fr.N)
    return float((a * hv + b * vv) @ W @ (c * hv + d * vv))
