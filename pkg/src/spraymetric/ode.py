"""Dormand-Prince 5(4) with step-size control and the method's native quartic dense output."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StepFailure

# Butcher tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B - B_LOW

# continuous extension: y(t0 + s h) = y0 + h * K^T (P @ [s, s^2, s^3, s^4])
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


@dataclass
class Step:
    t0: float
    h: float
    y0: np.ndarray
    K: np.ndarray  # (7, dim)

    def __call__(self, t: float) -> np.ndarray:
        s = (t - self.t0) / self.h
        return self.y0 + self.h * (self.K.T @ (P @ np.array([s, s * s, s**3, s**4])))


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # (len(t), dim)
    steps: list = field(repr=False, default_factory=list)
    n_accepted: int = 0
    n_rejected: int = 0
    n_evals: int = 0
    max_error: float = 0.0

    def __call__(self, t: float) -> np.ndarray:
        """Dense output at any t inside the integration span."""
        if not self.steps:
            return self.y[0].copy()
        t0 = self.steps[0].t0
        t1 = self.steps[-1].t0 + self.steps[-1].h
        lo, hi = min(t0, t1), max(t0, t1)
        if not lo - 1e-12 <= t <= hi + 1e-12:
            raise ValueError(f"t={t} outside [{lo}, {hi}]")
        starts = np.array([s.t0 for s in self.steps])
        sign = 1.0 if t1 >= t0 else -1.0
        k = int(np.searchsorted(sign * starts, sign * t, side="right")) - 1
        return self.steps[min(max(k, 0), len(self.steps) - 1)](t)


def _initial_step(fun, t0, y0, f0, direction, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = np.linalg.norm(y0 / scale) / np.sqrt(len(y0))
    d1 = np.linalg.norm(f0 / scale) / np.sqrt(len(y0))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = fun(t0 + direction * h0, y0 + direction * h0 * f0)
    d2 = np.linalg.norm((f1 - f0) / scale) / np.sqrt(len(y0)) / h0
    h1 = max(1e-6, h0 * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def solve(fun, t_span, y0, rtol=1e-10, atol=1e-10, t_eval=None, check=None, max_steps=200000) -> Solution:
    """Integrate y' = fun(t, y) over ``t_span``.

    ``check(t, y)`` is called on every accepted state and may raise
    :class:`StepFailure`.  With ``t_eval`` the returned samples come from the
    dense output; otherwise they are the accepted step endpoints.
    """
    t0, t1 = map(float, t_span)
    y = np.array(y0, dtype=float)
    direction = 1.0 if t1 >= t0 else -1.0
    sol = Solution(np.array([t0]), y[None, :].copy())
    if check is not None:
        check(t0, y)
    if t1 == t0:
        return _sample(sol, t_eval, [t0], [y])

    f = fun(t0, y)
    sol.n_evals += 1
    h = _initial_step(fun, t0, y, f, direction, rtol, atol)
    sol.n_evals += 1
    t = t0
    ts, ys = [t0], [y.copy()]
    K = np.empty((7, len(y)))
    while direction * (t1 - t) > 0:
        if sol.n_accepted + sol.n_rejected >= max_steps:
            raise StepFailure(f"exceeded {max_steps} steps at t={t}")
        h = min(h, abs(t1 - t))
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepFailure(f"step size underflow at t={t}")
        hs = direction * h
        K[0] = f
        for i in range(1, 7):
            K[i] = fun(t + C[i] * hs, y + hs * (np.asarray(A[i]) @ K[:i]))
        sol.n_evals += 6
        y_new = y + hs * (B[:6] @ K[:6])
        err_vec = hs * (E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            t_new = t1 if h == abs(t1 - t) else t + hs
            sol.steps.append(Step(t, hs, y.copy(), K.copy()))
            t, y, f = t_new, y_new, K[6].copy()
            ts.append(t)
            ys.append(y.copy())
            sol.n_accepted += 1
            sol.max_error = max(sol.max_error, err)
            if check is not None:
                check(t, y)
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
        else:
            sol.n_rejected += 1
            factor = max(MIN_FACTOR, SAFETY * err ** -0.2)
        h *= factor
    return _sample(sol, t_eval, ts, ys)


def _sample(sol: Solution, t_eval, ts, ys) -> Solution:
    if t_eval is None:
        sol.t = np.array(ts)
        sol.y = np.array(ys)
    else:
        sol.t = np.asarray(t_eval, dtype=float)
        sol.y = np.array([sol(t) for t in sol.t])
    return sol
