"""The deformation path on rotationally symmetric models.

At a point where the Killing field has length ``kappa`` the path keeps the
metric in the diagonal form ``a g_V + b g_H`` and the scales obey

    a' = -(c a + q a^2) / (q a + eps),   b' = -c b / (q a + eps)

with ``q = kappa^2`` and ``c = eps / (n - 1)``. The system is integrated for
all grid points at once, together with its first two ``q``-sensitivities,
which are what the scalar curvature of the reconstructed profile needs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import jets
from .errors import NoFeasibleEps, NotPositiveInitial, ZeroKappaZeroEps
from .jets import Fn, Jet
from .models import ProfileMetric
from .rk import dopri5

DEFAULT_TOL = 1e-10
FLOW_CSV_HEADER = ("s", "r", "a", "b", "f_reconstructed", "scal")


@dataclass(frozen=True)
class PointwiseState:
    kappa: float
    n: int
    eps: float
    a: float = 1.0
    b: float = 1.0
    s: float = 0.0

    def __post_init__(self):
        if self.eps < 0 or self.kappa < 0:
            raise ValueError("kappa and eps must be non-negative")
        if self.kappa == 0.0 and self.eps == 0.0:
            raise ZeroKappaZeroEps("the eps = 0 path is undefined where X vanishes")


def scale_rhs(a, b, q, n: int, eps: float):
    """Right-hand side for arrays or jets; ``q = kappa^2``."""
    if eps == 0.0:
        # q > 0 is enforced upstream; the quotient reduces to a' = -a, b' = 0
        return -a, b * 0.0
    c = eps / (n - 1)
    D = q * a + eps
    return -(c * a + q * a * a) / D, -(c * b) / D


def pointwise_rhs(st: PointwiseState) -> tuple[float, float]:
    da, db = scale_rhs(st.a, st.b, st.kappa**2, st.n, st.eps)
    return float(da), float(db)


@dataclass
class FlowField:
    """Scales ``a``, ``b`` at radial samples, with ``q``-sensitivities.

    ``state[0:3]`` holds ``(a, a_q, a_qq)`` and ``state[3:6]`` holds
    ``(b, b_q, b_qq)``, each an array over the grid.
    """

    model: ProfileMetric
    grid: np.ndarray
    eps: float
    s: float
    state: np.ndarray
    n: int = 2
    tol: float = DEFAULT_TOL

    @property
    def a(self) -> np.ndarray:
        return self.state[0]

    @property
    def b(self) -> np.ndarray:
        return self.state[3]

    @property
    def q(self) -> np.ndarray:
        return self.model.f(self.grid) ** 2


def initial_field(model: ProfileMetric, grid, eps: float, n: Optional[int] = None, tol: float = DEFAULT_TOL) -> FlowField:
    grid = np.asarray(grid, dtype=float)
    n = model.n if n is None else int(n)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0.0 and np.any(model.f(grid) == 0.0):
        raise ZeroKappaZeroEps("the eps = 0 path is undefined at fixed points; use eps > 0")
    state = np.zeros((6, grid.size))
    state[0] = 1.0
    state[3] = 1.0
    return FlowField(model, grid, float(eps), 0.0, state, n, tol)


def _jet_rhs(q: np.ndarray, n: int, eps: float):
    qj = Jet.variable(q, 2)

    def rhs(_s, y):
        a = Jet(tuple(y[0:3]))
        b = Jet(tuple(y[3:6]))
        da, db = scale_rhs(a, b, qj, n, eps)
        return np.concatenate([np.stack(da.d), np.stack(db.d)])

    return rhs


def integrate_many(flow: FlowField, s_values: Sequence[float], tol: Optional[float] = None) -> list[FlowField]:
    """Advance ``flow`` to every ``s`` in the increasing list ``s_values``."""
    s_values = np.asarray(s_values, dtype=float)
    if s_values.size == 0:
        return []
    if np.any(np.diff(s_values) < 0) or s_values[0] < flow.s:
        raise ValueError("s values must be increasing and not before the current time")
    tol = flow.tol if tol is None else float(tol)
    s_eval = np.concatenate([[flow.s], s_values])
    sol = dopri5(_jet_rhs(flow.q, flow.n, flow.eps), s_eval, flow.state, rtol=tol, atol=tol * 1e-2)
    return [replace(flow, s=float(s), state=sol.y[i + 1], tol=tol) for i, s in enumerate(s_values)]


def integrate_path(flow: FlowField, s_target: float, tol: Optional[float] = None) -> FlowField:
    if s_target < flow.s:
        raise ValueError("s_target precedes the current flow time")
    return integrate_many(flow, [s_target], tol)[0]


# ---------------------------------------------------------------------------
# Reconstructed metric b dr^2 + a f^2 dphi^2


@dataclass
class RadialJets:
    """``(value, d/dr, d^2/dr^2)`` of the two scales at the grid points."""

    a: tuple[np.ndarray, np.ndarray, np.ndarray]
    b: tuple[np.ndarray, np.ndarray, np.ndarray]


def radial_jets(flow: FlowField) -> RadialJets:
    f, f1, f2 = flow.model.warp(flow.grid, 2)
    q1 = 2.0 * f * f1
    q2 = 2.0 * (f1**2 + f * f2)
    st = flow.state

    def chain(v, v_q, v_qq):
        return v, v_q * q1, v_qq * q1**2 + v_q * q2

    return RadialJets(chain(*st[0:3]), chain(*st[3:6]))


def canonical_jets(flow: FlowField) -> RadialJets:
    """Scales of the eps = 0 path: ``a = exp(-s)``, ``b = 1``."""
    one, zero = np.ones_like(flow.grid), np.zeros_like(flow.grid)
    e = np.exp(-flow.s)
    return RadialJets((e * one, zero, zero), (one, zero, zero))


@dataclass
class Reconstruction:
    grid: np.ndarray
    a: np.ndarray
    b: np.ndarray
    f_reconstructed: np.ndarray
    h_r: np.ndarray
    scal: np.ndarray


def reconstruct(model: ProfileMetric, grid, rj: RadialJets) -> Reconstruction:
    """Orbit radius ``h = sqrt(a) f`` and scal of ``b dr^2 + h^2 dphi^2``.

    With ``e = sqrt(b)`` the curvature is ``-(2/(e h)) (h_r / e)_r``; at poles
    the limit ``-2 h'''/(e^2 h') + 2 e''/e^3`` is used.
    """
    r = np.asarray(grid, dtype=float)
    f, f1, f2, f3 = model.warp(r, 3)
    a, a1, a2 = rj.a
    b, b1, b2 = rj.b
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("reconstructed metric is not positive definite")
    sa, sb = np.sqrt(a), np.sqrt(b)
    sa1 = a1 / (2.0 * sa)
    sa2 = a2 / (2.0 * sa) - a1**2 / (4.0 * a * sa)
    h = sa * f
    h1 = sa1 * f + sa * f1
    h2 = sa2 * f + 2.0 * sa1 * f1 + sa * f2
    e1 = b1 / (2.0 * sb)
    e2 = b2 / (2.0 * sb) - b1**2 / (4.0 * b * sb)
    pole = model.is_pole(r)
    safe_h = np.where(pole, 1.0, h)
    interior = -(2.0 / (sb * safe_h)) * (h2 / sb - h1 * e1 / b)
    # at a pole f = 0 and the r-derivatives of a and b vanish
    h3 = 3.0 * sa2 * f1 + sa * f3
    safe_h1 = np.where(pole, h1, 1.0)
    at_pole = -2.0 * h3 / (b * safe_h1) + 2.0 * e2 / (b * sb)
    scal = np.where(pole, at_pole, interior)
    return Reconstruction(r, a, b, h, h1, scal)


def flow_reconstruction(flow: FlowField) -> Reconstruction:
    return reconstruct(flow.model, flow.grid, radial_jets(flow))


@dataclass
class MonotonicityReport:
    s: np.ndarray
    scal: np.ndarray  # [len(s), len(grid)]
    min_scal: float
    min_slope: float
    tol_mono: float
    passed: bool


def scal_along_flow(
    model: ProfileMetric,
    eps: float,
    s_values: Sequence[float],
    grid,
    tol: float = DEFAULT_TOL,
    tol_mono: float = 1e-6,
) -> MonotonicityReport:
    """scal of the reconstructed metric along the path, and its discrete s-slope."""
    s_values = np.asarray(s_values, dtype=float)
    scal0 = model.scal(np.asarray(grid, dtype=float))
    if np.any(scal0 <= 0.0):
        raise NotPositiveInitial(f"{model.name} has scal <= 0 on the grid")
    flows = integrate_many(initial_field(model, grid, eps, tol=tol), s_values, tol)
    S = np.stack([flow_reconstruction(fl).scal for fl in flows])
    if len(s_values) > 1:
        slope = np.diff(S, axis=0) / np.diff(s_values)[:, None]
        min_slope = float(np.min(slope))
    else:
        min_slope = 0.0
    min_scal = float(np.min(S))
    return MonotonicityReport(s_values, S, min_scal, min_slope, tol_mono,
                              bool(min_scal > 0.0 and min_slope >= -tol_mono))


# ---------------------------------------------------------------------------
# Blending with the canonical variation


@dataclass(frozen=True)
class BlendSpec:
    """Cutoff ``chi`` (zero near fixed points, one on the collar) and horizon."""

    chi: Fn
    eps: float = 1.0
    s_max: float = 1.5
    schedule_depth: int = 20

    def schedule(self) -> list[float]:
        return [self.eps * 0.5**k for k in range(self.schedule_depth)]


def band_cutoff(L: float, inner: tuple[float, float], name: str = "chi") -> Fn:
    """Cutoff on ``[0, L]`` rising on ``[inner[0], inner[1]]`` and falling symmetrically."""
    up = jets.smoothstep(*inner)
    L = float(L)
    down = up.compose(Fn(lambda r: L - r, f"{L:g}-r"))
    return Fn((up * down).rule, name)


@dataclass
class BlendedSnapshot:
    s: float
    eps: float
    recon: Reconstruction


@dataclass
class BlendResult:
    eps: float
    tried: list[float]
    snapshots: list[BlendedSnapshot]
    min_scal: float


def blend_jets(chi: Fn, grid, eps_jets: RadialJets, can_jets: RadialJets) -> RadialJets:
    c, c1, c2 = chi.derivs(np.asarray(grid, dtype=float), 2)

    def mix(u, v):
        # (1 - chi) u + chi v and its first two r-derivatives
        d = tuple(vi - ui for ui, vi in zip(u, v))
        return (
            u[0] + c * d[0],
            u[1] + c1 * d[0] + c * d[1],
            u[2] + c2 * d[0] + 2.0 * c1 * d[1] + c * d[2],
        )

    return RadialJets(mix(eps_jets.a, can_jets.a), mix(eps_jets.b, can_jets.b))


def blended_snapshots(model: ProfileMetric, chi: Fn, eps: float, s_values, grid, tol: float = DEFAULT_TOL) -> list[BlendedSnapshot]:
    flows = integrate_many(initial_field(model, grid, eps, tol=tol), s_values, tol)
    out = []
    for fl in flows:
        rj = blend_jets(chi, fl.grid, radial_jets(fl), canonical_jets(fl))
        out.append(BlendedSnapshot(fl.s, eps, reconstruct(model, fl.grid, rj)))
    return out


def blended_flow(model: ProfileMetric, spec: BlendSpec, grid, s_step: float = 0.1, tol: float = DEFAULT_TOL) -> BlendResult:
    """First eps of the halving schedule whose blended path keeps scal > 0 up to ``s_max``."""
    s_values = np.linspace(0.0, spec.s_max, int(round(spec.s_max / s_step)) + 1)
    tried = []
    for eps in spec.schedule():
        tried.append(eps)
        snaps = blended_snapshots(model, spec.chi, eps, s_values, grid, tol)
        m = min(float(np.min(sn.recon.scal)) for sn in snaps)
        if m > 0.0:
            return BlendResult(eps, tried, snaps, m)
    raise NoFeasibleEps(f"no eps in {tried[0]:g}/2^k, k < {spec.schedule_depth}, keeps scal > 0")


# ---------------------------------------------------------------------------
# CSV export


def write_flow_csv(path, flows: Sequence[FlowField]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLOW_CSV_HEADER)
        for fl in flows:
            rec = flow_reconstruction(fl)
            for i, r in enumerate(fl.grid):
                w.writerow([
                    f"{fl.s:.10g}", f"{r:.12g}", f"{rec.a[i]:.15g}", f"{rec.b[i]:.15g}",
                    f"{rec.f_reconstructed[i]:.15g}", f"{rec.scal[i]:.15g}",
                ])
    return path
