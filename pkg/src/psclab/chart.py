"""Tensor calculus on a single coordinate patch.

Metrics are given by vectorised component functions. Derivatives of the
components are taken from analytic callables when the metric supplies them
and from fourth-order central finite differences otherwise. Everything here
is the independent oracle against which the closed-form modules are checked.

Index conventions (leading axis ``m`` enumerates points):

* ``g[m, i, j]``           metric components
* ``dg[m, k, i, j]``       = d_k g_ij
* ``d2g[m, k, l, i, j]``   = d_k d_l g_ij
* ``christoffel[m, k, i, j]`` = Gamma^k_ij

The Laplacian is the non-negative one, ``Delta u = -div grad u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ChartMismatch, OutOfChart, SingularMetric, StencilUnderflow

# fourth-order central weights
_D1 = {-2: 1.0 / 12.0, -1: -8.0 / 12.0, 1: 8.0 / 12.0, 2: -1.0 / 12.0}
_D2 = {-2: -1.0 / 12.0, -1: 16.0 / 12.0, 0: -30.0 / 12.0, 1: 16.0 / 12.0, 2: -1.0 / 12.0}
_STENCIL_REACH = 2

PIVOT_RATIO = 1e-10


@dataclass(frozen=True)
class ChartMetric:
    """Riemannian metric on a rectangular coordinate patch.

    ``g`` maps an ``(m, n)`` array of points to ``(m, n, n)`` components.
    ``dg``/``d2g`` are optional analytic partials in the layout documented at
    module level. ``periodic`` flags angular coordinates whose stencils may
    wrap. ``killing_index`` names the coordinate whose coordinate field is the
    Killing field of the circle action, if any.
    """

    dim: int
    coords: tuple[str, ...]
    bounds: np.ndarray
    g: Callable[[np.ndarray], np.ndarray]
    dg: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d2g: Optional[Callable[[np.ndarray], np.ndarray]] = None
    periodic: tuple[bool, ...] = ()
    killing_index: Optional[int] = None
    name: str = "chart"
    fd_step: Optional[float] = None

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float).reshape(self.dim, 2)
        object.__setattr__(self, "bounds", b)
        if self.dim < 1 or len(self.coords) != self.dim:
            raise ValueError("coords must name every coordinate")
        per = tuple(self.periodic) or (False,) * self.dim
        if len(per) != self.dim:
            raise ValueError("periodic flags must match dim")
        object.__setattr__(self, "periodic", per)

    @property
    def has_analytic(self) -> bool:
        return self.dg is not None and self.d2g is not None

    @property
    def scale(self) -> float:
        widths = [hi - lo for (lo, hi), p in zip(self.bounds, self.periodic) if not p]
        widths = [w for w in widths if np.isfinite(w)]
        return max(widths) if widths else 1.0

    @property
    def step(self) -> float:
        if self.fd_step is not None:
            return float(self.fd_step)
        # eps**(1/6) balances h**4 truncation against eps/h**2 round-off; only
        # charts wider than pi get a proportionally larger step
        return max(1e-4, np.finfo(float).eps ** (1.0 / 6.0) * max(1.0, self.scale / np.pi))

    def components(self, x) -> np.ndarray:
        X = as_points(x, self.dim)
        G = np.asarray(self.g(X), dtype=float)
        return 0.5 * (G + np.swapaxes(G, -1, -2))

    def with_step(self, h: float) -> "ChartMetric":
        return _replace(self, fd_step=h)

    def without_derivatives(self) -> "ChartMetric":
        return _replace(self, dg=None, d2g=None)


def _replace(metric: ChartMetric, **kw) -> ChartMetric:
    from dataclasses import replace

    return replace(metric, **kw)


@dataclass(frozen=True)
class ScalarField:
    """Function on a chart with optional analytic gradient and Hessian."""

    value: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "u"

    @property
    def has_analytic(self) -> bool:
        return self.grad is not None and self.hess is not None


@dataclass
class CurvatureReport:
    point: np.ndarray
    christoffel: np.ndarray
    ricci: np.ndarray
    scal: np.ndarray
    method: str
    stencil_h: Optional[float]
    g: np.ndarray = field(repr=False, default=None)
    ginv: np.ndarray = field(repr=False, default=None)

    def ricci_trace(self) -> np.ndarray:
        return np.einsum("...ij,...ij->...", self.ginv, self.ricci)


def as_points(x, n: int) -> np.ndarray:
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n:
        raise ValueError(f"expected points of shape (m, {n}), got {np.shape(x)}")
    return X


def _squeeze(x, arr):
    return arr[0] if np.asarray(x).ndim == 1 else arr


def _check_inside(metric: ChartMetric, X: np.ndarray, reach: float) -> None:
    for k in range(metric.dim):
        if metric.periodic[k]:
            continue
        lo, hi = metric.bounds[k]
        col = X[:, k]
        if np.any(col < lo) or np.any(col > hi):
            raise OutOfChart(f"{metric.name}: coordinate {metric.coords[k]} outside [{lo}, {hi}]")
        if reach and (np.any(col - reach < lo) or np.any(col + reach > hi)):
            raise StencilUnderflow(
                f"{metric.name}: stencil of width {reach:.3g} leaves the chart in {metric.coords[k]}"
            )


def fd_partials(func, X: np.ndarray, h: float, second: bool = True):
    """Fourth-order central first (and second) partials of ``func`` at ``X``.

    ``func`` maps ``(m, n)`` points to arrays with leading axis ``m``. Returns
    ``(f, d1, d2)`` with the derivative axes inserted right after ``m``.
    Mixed partials use the tensor product of the first-derivative stencil,
    computed once per unordered pair and mirrored so ``d2`` is exactly
    symmetric.
    """
    m, n = X.shape
    shifts = [np.zeros(n)]
    for k in range(n):
        for s in (-2, -1, 1, 2):
            e = np.zeros(n)
            e[k] = s * h
            shifts.append(e)
    pairs = []
    if second:
        for k in range(n):
            for l in range(k + 1, n):
                for s in (-2, -1, 1, 2):
                    for t in (-2, -1, 1, 2):
                        e = np.zeros(n)
                        e[k] = s * h
                        e[l] = t * h
                        shifts.append(e)
                pairs.append((k, l))
    S = np.asarray(shifts)
    P = S.shape[0]
    pts = (X[None, :, :] + S[:, None, :]).reshape(P * m, n)
    F = np.asarray(func(pts), dtype=float)
    F = F.reshape((P, m) + F.shape[1:])
    f0 = F[0]
    tail = f0.shape[1:]

    d1 = np.zeros((m, n) + tail)
    idx = 1
    axial = {}
    for k in range(n):
        for s in (-2, -1, 1, 2):
            axial[(k, s)] = F[idx]
            idx += 1
        d1[:, k] = sum(_D1[s] * axial[(k, s)] for s in (-2, -1, 1, 2)) / h
    if not second:
        return f0, d1, None

    d2 = np.zeros((m, n, n) + tail)
    for k in range(n):
        d2[:, k, k] = (
            sum(_D2[s] * axial[(k, s)] for s in (-2, -1, 1, 2)) + _D2[0] * f0
        ) / h**2
    for k, l in pairs:
        acc = 0.0
        for s in (-2, -1, 1, 2):
            for t in (-2, -1, 1, 2):
                acc = acc + _D1[s] * _D1[t] * F[idx]
                idx += 1
        d2[:, k, l] = acc / h**2
        d2[:, l, k] = d2[:, k, l]
    return f0, d1, d2


@dataclass
class MetricJet:
    g: np.ndarray
    dg: np.ndarray
    d2g: Optional[np.ndarray]
    method: str
    h: Optional[float]


def _resolve_method(metric: ChartMetric, method: str) -> str:
    if method == "auto":
        return "analytic" if metric.has_analytic else "finite-difference"
    if method in ("fd", "finite-difference"):
        return "finite-difference"
    if method == "analytic":
        if not metric.has_analytic:
            raise ValueError(f"{metric.name} has no analytic derivatives")
        return "analytic"
    raise ValueError(f"unknown method {method!r}")


def metric_jet(metric: ChartMetric, x, method: str = "auto", second: bool = True) -> MetricJet:
    X = as_points(x, metric.dim)
    method = _resolve_method(metric, method)
    if method == "analytic":
        _check_inside(metric, X, 0.0)
        G = metric.components(X)
        dG = np.asarray(metric.dg(X), dtype=float)
        dG = 0.5 * (dG + np.swapaxes(dG, -1, -2))
        d2G = None
        if second:
            d2G = np.asarray(metric.d2g(X), dtype=float)
            d2G = 0.5 * (d2G + np.swapaxes(d2G, -1, -2))
            d2G = 0.5 * (d2G + np.swapaxes(d2G, 1, 2))
        return MetricJet(G, dG, d2G, method, None)
    h = metric.step
    _check_inside(metric, X, _STENCIL_REACH * h)
    G, dG, d2G = fd_partials(metric.components, X, h, second)
    return MetricJet(G, dG, d2G, method, h)


def inverse_metric(G: np.ndarray) -> np.ndarray:
    """Inverse through a Cholesky factorisation with a pivot-ratio check."""
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric("metric is not positive definite") from exc
    piv = np.diagonal(L, axis1=-2, axis2=-1) ** 2
    if np.any(piv.min(axis=-1) < PIVOT_RATIO * piv.max(axis=-1)):
        raise SingularMetric("metric is numerically singular (pivot ratio below 1e-10)")
    Linv = np.linalg.inv(L)
    ginv = np.einsum("...ki,...kj->...ij", Linv, Linv)
    return 0.5 * (ginv + np.swapaxes(ginv, -1, -2))


def _christoffel_parts(G, dG):
    ginv = inverse_metric(G)
    T = np.einsum("mijl->mlij", dG) + np.einsum("mjil->mlij", dG) - dG
    gam = 0.5 * np.einsum("mkl,mlij->mkij", ginv, T)
    gam = 0.5 * (gam + np.swapaxes(gam, -1, -2))
    return ginv, T, gam


def _curvature(J: MetricJet):
    ginv, T, gam = _christoffel_parts(J.g, J.dg)
    dG, d2G = J.dg, J.d2g
    dginv = -np.einsum("mka,mpab,mbl->mpkl", ginv, dG, ginv)
    dT = (
        np.einsum("mpijl->mplij", d2G)
        + np.einsum("mpjil->mplij", d2G)
        - d2G
    )
    dgam = 0.5 * (
        np.einsum("mpkl,mlij->mpkij", dginv, T) + np.einsum("mkl,mplij->mpkij", ginv, dT)
    )
    ric = (
        np.einsum("mkkij->mij", dgam)
        - np.einsum("mjkik->mij", dgam)
        + np.einsum("mkkl,mlij->mij", gam, gam)
        - np.einsum("mkjl,mlik->mij", gam, gam)
    )
    ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
    scal = np.einsum("mij,mij->m", ginv, ric)
    return ginv, gam, ric, scal


def christoffel(metric: ChartMetric, x, method: str = "auto") -> np.ndarray:
    """Levi-Civita symbols ``Gamma[k, i, j]`` at ``x`` (batched if ``x`` is 2-D)."""
    J = metric_jet(metric, x, method, second=False)
    _, _, gam = _christoffel_parts(J.g, J.dg)
    return _squeeze(x, gam)


def scalar_curvature(metric: ChartMetric, x, method: str = "auto") -> CurvatureReport:
    J = metric_jet(metric, x, method, second=True)
    ginv, gam, ric, scal = _curvature(J)
    return CurvatureReport(
        point=_squeeze(x, as_points(x, metric.dim)),
        christoffel=_squeeze(x, gam),
        ricci=_squeeze(x, ric),
        scal=_squeeze(x, scal),
        method=J.method,
        stencil_h=J.h,
        g=_squeeze(x, J.g),
        ginv=_squeeze(x, ginv),
    )


def _field_jet(metric: ChartMetric, u: ScalarField, X: np.ndarray, method: str):
    if method == "analytic" and u.has_analytic:
        return (
            np.asarray(u.value(X), dtype=float),
            np.asarray(u.grad(X), dtype=float),
            np.asarray(u.hess(X), dtype=float),
        )
    return fd_partials(lambda P: np.asarray(u.value(P), dtype=float), X, metric.step, True)


def laplacian(metric: ChartMetric, u: ScalarField, x, method: str = "auto") -> np.ndarray:
    """Non-negative Laplacian ``-g^ij (d_i d_j u - Gamma^k_ij d_k u)``."""
    X = as_points(x, metric.dim)
    method = _resolve_method(metric, method)
    J = metric_jet(metric, X, method, second=False)
    ginv, _, gam = _christoffel_parts(J.g, J.dg)
    _, du, ddu = _field_jet(metric, u, X, method)
    hess = ddu - np.einsum("mkij,mk->mij", gam, du)
    out = -np.einsum("mij,mij->m", ginv, hess)
    return _squeeze(x, out)


def differential_norm_sq(metric: ChartMetric, u: ScalarField, x, method: str = "auto") -> np.ndarray:
    """``|du|^2 = g^ij d_i u d_j u``."""
    X = as_points(x, metric.dim)
    method = _resolve_method(metric, method)
    ginv = inverse_metric(metric.components(X))
    if method == "analytic" and u.grad is not None:
        du = np.asarray(u.grad(X), dtype=float)
    else:
        _check_inside(metric, X, _STENCIL_REACH * metric.step)
        _, du, _ = fd_partials(lambda P: np.asarray(u.value(P), dtype=float), X, metric.step, False)
    return _squeeze(x, np.einsum("mij,mi,mj->m", ginv, du, du))


def hypersurface_mean_curvature(
    metric: ChartMetric, x, coord: int, outward: int = 1, method: str = "auto"
) -> np.ndarray:
    """Mean curvature of the level set ``{x^coord = const}`` through ``x``.

    ``outward = +1`` takes the unit normal pointing towards increasing
    ``x^coord`` as the exterior normal, ``-1`` the opposite. The value is the
    trace of ``II(X, Y) = <nabla_X N, Y>``, so the unit sphere in R^n bounding
    the unit ball has mean curvature ``n - 1``. Computed as ``div N`` of the
    normalised gradient field, which equals the trace because ``|N| = 1``.
    """
    if outward not in (1, -1):
        raise ValueError("outward must be +1 or -1")
    X = as_points(x, metric.dim)
    J = metric_jet(metric, X, method, second=False)
    ginv, _, gam = _christoffel_parts(J.g, J.dg)
    dginv = -np.einsum("mka,mpab,mbl->mpkl", ginv, J.dg, ginv)
    c = coord
    gcc = ginv[:, c, c]
    root = np.sqrt(gcc)
    N = outward * ginv[:, :, c] / root[:, None]
    div_part = np.einsum("mii->m", dginv[:, :, :, c]) / root
    div_part -= np.einsum("mi,mi->m", ginv[:, :, c], dginv[:, :, c, c]) / (2.0 * root**3)
    trace_gam = np.einsum("miij->mj", gam)
    H = outward * div_part + np.einsum("mj,mj->m", trace_gam, N)
    return _squeeze(x, H)


@dataclass
class Jet1Report:
    max_dev0: float
    max_dev1: float
    tol: float
    passed: bool
    points: int


def jet1_compare(metric_a: ChartMetric, metric_b: ChartMetric, s_points, tol: float) -> Jet1Report:
    """Compare the 1-jets (values and first partials) of two metrics on points."""
    if metric_a.dim != metric_b.dim or not np.allclose(metric_a.bounds, metric_b.bounds):
        raise ChartMismatch(f"{metric_a.name} and {metric_b.name} live on different charts")
    X = as_points(s_points, metric_a.dim)
    Ja = metric_jet(metric_a, X, "auto", second=False)
    Jb = metric_jet(metric_b, X, "auto", second=False)
    d0 = float(np.max(np.abs(Ja.g - Jb.g)))
    d1 = float(np.max(np.abs(Ja.dg - Jb.dg)))
    return Jet1Report(d0, d1, tol, bool(d0 <= tol and d1 <= tol), X.shape[0])


def sample_interior(metric: ChartMetric, count: int, rng: np.random.Generator, margin: float | Sequence[float] = 0.0) -> np.ndarray:
    """Uniform random points inside the chart, keeping ``margin`` off each wall."""
    margin = np.broadcast_to(np.asarray(margin, dtype=float), (metric.dim,))
    lo = metric.bounds[:, 0] + margin
    hi = metric.bounds[:, 1] - margin
    return lo + (hi - lo) * rng.random((count, metric.dim))
