"""Vectorised Dormand-Prince 5(4) with one shared step size.

The state may be any array; all entries advance with the same step, which
is chosen from the maximum scaled error over every entry. Since max is
insensitive to ordering, permuting independent components gives
bit-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import StepUnderflow

MIN_STEP = 1e-12

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class Solution:
    s: np.ndarray
    y: np.ndarray
    nsteps: int
    nrejected: int
    nfev: int


def dopri5(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    s_eval,
    y0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    h0: float | None = None,
    max_steps: int = 1_000_000,
) -> Solution:
    """Integrate ``y' = rhs(s, y)`` and return the state at every ``s_eval``.

    ``s_eval`` must be increasing; integration starts at ``s_eval[0]`` and
    steps are clipped so that every requested abscissa is hit exactly.
    """
    s_eval = np.asarray(s_eval, dtype=float)
    if s_eval.ndim != 1 or s_eval.size == 0 or np.any(np.diff(s_eval) < 0):
        raise ValueError("s_eval must be a non-empty increasing 1-D array")
    y = np.array(y0, dtype=float)
    out = np.empty((s_eval.size,) + y.shape)
    out[0] = y
    s = float(s_eval[0])
    span = float(s_eval[-1] - s)
    h = h0 if h0 is not None else (min(1e-2, span) if span > 0 else 1e-2)
    k1 = rhs(s, y)
    nfev, nsteps, nrej = 1, 0, 0
    idx = 1
    while idx < s_eval.size:
        target = float(s_eval[idx])
        if target == s:
            out[idx] = y
            idx += 1
            continue
        if nsteps + nrej >= max_steps:
            raise StepUnderflow("step budget exhausted")
        hit = h >= target - s
        step = target - s if hit else h
        if step < MIN_STEP and not hit:
            raise StepUnderflow(f"step {step:.3e} below {MIN_STEP:g} at s={s:.6g}")
        ks = [k1]
        for i in range(1, 7):
            yi = y + step * sum(a * k for a, k in zip(_A[i], ks))
            ks.append(rhs(s + _C[i] * step, yi))
        nfev += 6
        y_new = y + step * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
        err_vec = step * sum(e * k for e, k in zip(_E, ks))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale)) if err_vec.size else 0.0
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            s = target if hit else s + step
            y = y_new
            k1 = ks[6]  # first-same-as-last
            nsteps += 1
            if hit:
                out[idx] = y
                idx += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** (-0.2)))
            # a step clipped to hit s_eval says little about larger steps
            h = max(h, step * fac) if hit and fac >= 1.0 else step * fac
        else:
            nrej += 1
            h = step * max(0.1, 0.9 * err ** (-0.2)) if np.isfinite(err) else step * 0.1
            if h < MIN_STEP:
                raise StepUnderflow(f"step {h:.3e} below {MIN_STEP:g} at s={s:.6g}")
    return Solution(s_eval.copy(), out, nsteps, nrej, nfev)


def rk4_fixed(rhs, s_eval, y0, h: float) -> np.ndarray:
    """Classical RK4 with step at most ``h``, landing on each ``s_eval``; a test oracle."""
    s_eval = np.asarray(s_eval, dtype=float)
    y = np.array(y0, dtype=float)
    out = np.empty((s_eval.size,) + y.shape)
    out[0] = y
    s = s_eval[0]
    for i in range(1, s_eval.size):
        n = max(1, int(np.ceil((s_eval[i] - s) / h - 1e-9)))
        dt = (s_eval[i] - s) / n
        for _ in range(n):
            k1 = rhs(s, y)
            k2 = rhs(s + dt / 2, y + dt / 2 * k1)
            k3 = rhs(s + dt / 2, y + dt / 2 * k2)
            k4 = rhs(s + dt, y + dt * k3)
            y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            s = s + dt
        s = s_eval[i]
        out[i] = y
    return out
