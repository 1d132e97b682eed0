"""Killing-field quantities and first variations of scalar curvature.

``X`` is always the coordinate field of the circle action (``d_phi`` with
2pi-periodic ``phi``). For a deformation

    g_lam = g + lam * (alpha(|X|^2) g + beta(|X|^2) w (x) w),   w = g(X, .)

the derivative of scal at ``lam = 0`` has a closed form in terms of the
four Killing quantities ``|X|^2``, ``ric(X, X)``, ``|nabla X|^2`` and
``|nabla_X X|^2``. Everything closed-form here is mirrored by a chart
computation so the two can be compared point by point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import chart as ct
from .chart import ChartMetric, ScalarField
from .errors import (
    DistanceFieldUnavailable,
    DomainError,
    IndefinitePerturbation,
)
from .jets import Fn
from .models import DoublyWarpedMetric, ProfileMetric, flat_chart  # noqa: F401

ESTIMATE_TOL = 1e-10


# ---------------------------------------------------------------------------
# Killing quantities


@dataclass
class KillingData:
    """Killing quantities at a batch of points (arrays of equal length)."""

    x: np.ndarray
    norm_sq: np.ndarray
    ric_XX: np.ndarray
    grad_norm_sq: np.ndarray
    acc_norm_sq: np.ndarray
    scal: np.ndarray
    n: int
    method: str
    # <X, nabla_X X>; vanishes by skew-symmetry of nabla X
    x_dot_acc: Optional[np.ndarray] = None

    @property
    def estimate_margin(self) -> np.ndarray:
        return self.norm_sq * self.grad_norm_sq - 2.0 * self.acc_norm_sq


def model_points(model, r) -> np.ndarray:
    """Chart points on the Killing orbit through radial parameter ``r``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    c = model.chart()
    X = np.empty((r.size, c.dim))
    X[:, 0] = r
    for i in range(1, c.dim):
        lo, hi = c.bounds[i]
        X[:, i] = 1.0 if c.periodic[i] else 0.5 * (lo + hi)
    return X


def _radial(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[:, 0] if x.ndim == 2 else np.atleast_1d(x)


def killing_data(model, x, method: str = "closed") -> KillingData:
    """Killing quantities of ``X = d_phi``.

    For closed models ``x`` holds radial parameters (or chart points, whose
    first coordinate is used); ``method="oracle"`` recomputes everything from
    Christoffel symbols of the chart. Chart metrics only support the oracle.
    """
    if isinstance(model, ChartMetric):
        return _oracle_killing(model, x, "auto")
    if method == "oracle":
        pts = model_points(model, _radial(x))
        return _oracle_killing(model.chart(), pts, "auto")
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    r = _radial(x)
    if isinstance(model, ProfileMetric):
        f, f1 = model.warp(r, 1)
        scal = model.scal(r)
        t = f**2
        # 2D identity ric = (scal/2) g stays finite at poles
        return KillingData(r, t, 0.5 * scal * t, 2.0 * f1**2, t * f1**2, scal, 2, "closed",
                           np.zeros_like(r))
    if isinstance(model, DoublyWarpedMetric):
        a, a1 = model.a.derivs(r, 1)
        return KillingData(
            r, a**2, model.ric_killing(r), 2.0 * a1**2, a**2 * a1**2, model.scal(r), model.n,
            "closed", np.zeros_like(r),
        )
    raise TypeError(f"no closed-form Killing data for {type(model).__name__}")


def _oracle_killing(metric: ChartMetric, x, method: str) -> KillingData:
    k = metric.killing_index
    if k is None:
        raise ValueError(f"{metric.name} declares no Killing coordinate")
    X = ct.as_points(x, metric.dim)
    rep = ct.scalar_curvature(metric, X, method)
    G = metric.components(X)
    ginv = np.asarray(rep.ginv).reshape(X.shape[0], metric.dim, metric.dim)
    gam = rep.christoffel.reshape(X.shape[0], metric.dim, metric.dim, metric.dim)
    ric = rep.ricci.reshape(X.shape[0], metric.dim, metric.dim)
    nabla = gam[:, :, :, k]  # (nabla X)^j_i = Gamma^j_ik, indexed [m, j, i]
    grad = np.einsum("mia,mjb,mji,mba->m", ginv, G, nabla, nabla)
    acc = gam[:, :, k, k]
    acc_sq = np.einsum("mij,mi,mj->m", G, acc, acc)
    return KillingData(
        X,
        G[:, k, k],
        ric[:, k, k],
        grad,
        acc_sq,
        np.atleast_1d(rep.scal),
        metric.dim,
        f"oracle/{rep.method}",
        np.einsum("mj,mj->m", G[:, k, :], acc),
    )


@dataclass
class KillingEstimateReport:
    min_margin: float
    margins: np.ndarray
    saturated: np.ndarray
    passed: bool
    tol: float = ESTIMATE_TOL


def killing_estimate_check(model, sample_grid, method: str = "closed", tol: float = ESTIMATE_TOL) -> KillingEstimateReport:
    """Minimum of ``|X|^2 |nabla X|^2 - 2 |nabla_X X|^2`` over the grid."""
    kd = killing_data(model, sample_grid, method)
    m = kd.estimate_margin
    scale = 1.0 + np.abs(kd.norm_sq * kd.grad_norm_sq)
    return KillingEstimateReport(
        float(np.min(m)), m, np.abs(m) <= 1e-12 * scale, bool(np.min(m) >= -tol), tol
    )


# ---------------------------------------------------------------------------
# Deformation coefficients


@dataclass(frozen=True)
class DeformationParams:
    """Coefficients ``alpha``, ``beta`` of the deformation, as functions of ``t = |X|^2``."""

    alpha: Fn
    beta: Fn
    flavor: str = "general"
    C: Optional[float] = None
    eps: Optional[float] = None
    domain: tuple[float, float] = (-np.inf, np.inf)

    def __post_init__(self):
        if self.flavor not in ("general", "conformal", "pure_beta", "ricci_weg"):
            raise ValueError(f"unknown flavor {self.flavor!r}")

    def coefficients(self, t, order: int = 2):
        t = np.asarray(t, dtype=float)
        lo, hi = self.domain
        if np.any(t < lo) or np.any(t > hi):
            raise DomainError(f"|X|^2 outside the coefficient domain [{lo}, {hi}]")
        return self.alpha.derivs(t, order), self.beta.derivs(t, order)


def general(alpha: Fn, beta: Fn, domain=(-np.inf, np.inf)) -> DeformationParams:
    return DeformationParams(alpha, beta, "general", domain=domain)


def conformal(alpha: Fn) -> DeformationParams:
    return DeformationParams(alpha, Fn.const(0.0), "conformal")


def pure_beta(beta: Fn) -> DeformationParams:
    return DeformationParams(Fn.const(0.0), beta, "pure_beta")


def ricci_weg(C: float, eps: float, n: int) -> DeformationParams:
    """``alpha = C + (eps/(n-1))/(t+eps)``, ``beta = 1/(t+eps)``.

    The pair satisfies ``(n-1) alpha' + beta' t + beta = 0``, which removes the
    Ricci term from the variation, and is defined at zeros of ``X``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    alpha = float(C) + Fn.shifted_reciprocal(eps, eps / (n - 1))
    beta = Fn.shifted_reciprocal(eps)
    return DeformationParams(alpha, beta, "ricci_weg", float(C), float(eps), domain=(-eps, np.inf))


def random_function(rng: np.random.Generator, allow_rational: bool = True) -> Fn:
    """Polynomial of degree <= 4 with coefficients in [-1, 1], plus optionally ``c/(t+e)``."""
    deg = int(rng.integers(0, 5))
    coeffs = rng.uniform(-1.0, 1.0, deg + 1)
    fn = Fn.poly(coeffs)
    if allow_rational and rng.random() < 0.5:
        e = float(rng.choice([0.5, 1.0, 2.0]))
        fn = fn + Fn.shifted_reciprocal(e, float(rng.uniform(-1.0, 1.0)))
    return fn


def random_family(seed: int, count: int) -> list[DeformationParams]:
    """Reproducible list of ``(alpha, beta)`` pairs for sweeps."""
    rng = np.random.default_rng(seed)
    return [general(random_function(rng), random_function(rng)) for _ in range(count)]


# ---------------------------------------------------------------------------
# Closed-form identities


def delta_of_alpha(model, alpha: Fn, x, method: str = "closed") -> np.ndarray:
    """Laplacian of ``alpha(|X|^2)`` from the Killing quantities."""
    kd = killing_data(model, x, method)
    _, a1, a2 = alpha.derivs(kd.norm_sq, 2)
    return 2.0 * a1 * (kd.ric_XX - kd.grad_norm_sq) - 4.0 * a2 * kd.acc_norm_sq


def composed_field(metric: ChartMetric, alpha: Fn) -> ScalarField:
    """``alpha(g(X, X))`` as a chart field with exact gradient and Hessian."""
    k = metric.killing_index

    def parts(X):
        t = metric.components(X)[:, k, k]
        return t, alpha.derivs(t, 2)

    def value(X):
        return parts(X)[1][0]

    def grad(X):
        _, (_, a1, _) = parts(X)
        return a1[:, None] * np.asarray(metric.dg(X))[:, :, k, k]

    def hess(X):
        _, (_, a1, a2) = parts(X)
        dt = np.asarray(metric.dg(X))[:, :, k, k]
        ddt = np.asarray(metric.d2g(X))[:, :, :, k, k]
        return a2[:, None, None] * dt[:, :, None] * dt[:, None, :] + a1[:, None, None] * ddt

    if metric.has_analytic:
        return ScalarField(value, grad, hess, f"{alpha.name}(|X|^2)")
    return ScalarField(value, name=f"{alpha.name}(|X|^2)")


def delta_of_alpha_oracle(metric: ChartMetric, alpha: Fn, x, method: str = "auto") -> np.ndarray:
    return ct.laplacian(metric, composed_field(metric, alpha), x, method)


def variation_terms(kd: KillingData, params: DeformationParams):
    """The coefficient terms of the closed-form variation, evaluated on ``kd``."""
    n = kd.n
    t = kd.norm_sq
    (al, a1, a2), (be, b1, b2) = params.coefficients(t, 2)
    ric_coef = 2.0 * ((n - 1) * a1 + b1 * t + be)
    grad_coef = 2.0 * (n - 1) * a1 + 2.0 * b1 * t + 3.0 * be
    acc_coef = 4.0 * (n - 1) * a2 + 4.0 * b2 * t + 10.0 * b1
    return al, ric_coef, grad_coef, acc_coef


def dscal_closed(kd: KillingData, params: DeformationParams) -> np.ndarray:
    al, ric_coef, grad_coef, acc_coef = variation_terms(kd, params)
    return (
        -al * kd.scal
        + ric_coef * kd.ric_XX
        - grad_coef * kd.grad_norm_sq
        - acc_coef * kd.acc_norm_sq
    )


def dscal_conformal(kd: KillingData, alpha: Fn) -> np.ndarray:
    """Variation for ``beta = 0``: ``-alpha scal + (n-1) Delta alpha``."""
    al, a1, a2 = alpha.derivs(kd.norm_sq, 2)
    delta = 2.0 * a1 * (kd.ric_XX - kd.grad_norm_sq) - 4.0 * a2 * kd.acc_norm_sq
    return -al * kd.scal + (kd.n - 1) * delta


def dscal_pure_beta(kd: KillingData, beta: Fn) -> np.ndarray:
    """Variation for ``alpha = 0``."""
    t = kd.norm_sq
    be, b1, b2 = beta.derivs(t, 2)
    return (
        2.0 * (b1 * t + be) * kd.ric_XX
        - (2.0 * b1 * t + 3.0 * be) * kd.grad_norm_sq
        - (4.0 * b2 * t + 10.0 * b1) * kd.acc_norm_sq
    )


def ricci_free_bound(kd: KillingData, params: DeformationParams) -> np.ndarray:
    """``-alpha scal + (n-1) alpha' |nabla X|^2``, an upper bound for the
    variation once the Ricci coefficient vanishes and ``beta' <= 0``."""
    (al, a1), _ = params.coefficients(kd.norm_sq, 1)
    return -al * kd.scal + (kd.n - 1) * a1 * kd.grad_norm_sq


def ricci_free_applicable(kd: KillingData, params: DeformationParams, tol: float = 1e-12) -> np.ndarray:
    (_, a1), (be, b1) = params.coefficients(kd.norm_sq, 1)
    return (np.abs((kd.n - 1) * a1 + b1 * kd.norm_sq + be) <= tol) & (b1 <= tol)


# ---------------------------------------------------------------------------
# Deformed metric and the finite-difference variation


def deformed_chart(metric: ChartMetric, params: DeformationParams, lam: float) -> ChartMetric:
    """Chart of ``g + lam (alpha g + beta w (x) w)``; exact partials when available."""
    k = metric.killing_index
    if k is None:
        raise ValueError(f"{metric.name} declares no Killing coordinate")
    lam = float(lam)

    def coeffs(G):
        t = G[:, k, k]
        (al, a1, a2), (be, b1, b2) = params.coefficients(t, 2)
        return t, al, a1, a2, be, b1, b2

    def g(X):
        G = metric.components(X)
        _, al, _, _, be, _, _ = coeffs(G)
        w = G[:, :, k]
        return (1.0 + lam * al)[:, None, None] * G + (lam * be)[:, None, None] * (
            w[:, :, None] * w[:, None, :]
        )

    def dg(X):
        G = metric.components(X)
        dG = np.asarray(metric.dg(X), dtype=float)
        _, al, a1, _, be, b1, _ = coeffs(G)
        w = G[:, :, k]
        dw = dG[:, :, :, k]  # [m, p, i]
        dt = dG[:, :, k, k]  # [m, p]
        ww = w[:, :, None] * w[:, None, :]
        dww = dw[:, :, :, None] * w[:, None, None, :] + w[:, None, :, None] * dw[:, :, None, :]
        return (
            (lam * a1)[:, None, None, None] * dt[:, :, None, None] * G[:, None]
            + (1.0 + lam * al)[:, None, None, None] * dG
            + (lam * b1)[:, None, None, None] * dt[:, :, None, None] * ww[:, None]
            + (lam * be)[:, None, None, None] * dww
        )

    def d2g(X):
        G = metric.components(X)
        dG = np.asarray(metric.dg(X), dtype=float)
        d2G = np.asarray(metric.d2g(X), dtype=float)
        _, al, a1, a2, be, b1, b2 = coeffs(G)
        w = G[:, :, k]
        dw = dG[:, :, :, k]
        d2w = d2G[:, :, :, :, k]  # [m, p, q, i]
        dt = dG[:, :, k, k]
        d2t = d2G[:, :, :, k, k]
        ww = w[:, :, None] * w[:, None, :]
        dww = dw[:, :, :, None] * w[:, None, None, :] + w[:, None, :, None] * dw[:, :, None, :]
        d2ww = (
            d2w[:, :, :, :, None] * w[:, None, None, None, :]
            + dw[:, :, None, :, None] * dw[:, None, :, None, :]
            + dw[:, None, :, :, None] * dw[:, :, None, None, :]
            + w[:, None, None, :, None] * d2w[:, :, :, None, :]
        )
        dtdt = dt[:, :, None] * dt[:, None, :]
        L = lam
        s = lambda v: v[:, None, None, None, None]  # noqa: E731
        return (
            s(L * a2) * dtdt[..., None, None] * G[:, None, None]
            + s(L * a1) * d2t[..., None, None] * G[:, None, None]
            + s(L * a1) * (dt[:, :, None, None, None] * dG[:, None] + dt[:, None, :, None, None] * dG[:, :, None])
            + s(1.0 + L * al) * d2G
            + s(L * b2) * dtdt[..., None, None] * ww[:, None, None]
            + s(L * b1) * d2t[..., None, None] * ww[:, None, None]
            + s(L * b1) * (dt[:, :, None, None, None] * dww[:, None] + dt[:, None, :, None, None] * dww[:, :, None])
            + s(L * be) * d2ww
        )

    analytic = metric.has_analytic
    return ChartMetric(
        dim=metric.dim,
        coords=metric.coords,
        bounds=metric.bounds,
        g=g,
        dg=dg if analytic else None,
        d2g=d2g if analytic else None,
        periodic=metric.periodic,
        killing_index=k,
        name=f"{metric.name}+{lam:g}h",
        fd_step=metric.fd_step,
    )


def check_positive(metric: ChartMetric, params: DeformationParams, lam: float, X: np.ndarray) -> None:
    """Raise if ``g_lam`` is not positive definite at ``X``.

    On ``X^perp`` the deformation scales by ``1 + lam alpha``; along ``X`` by
    ``1 + lam (alpha + beta |X|^2)``.
    """
    t = metric.components(X)[:, metric.killing_index, metric.killing_index]
    (al, _, _), (be, _, _) = params.coefficients(t, 2)
    lo = np.minimum(1.0 + lam * al, 1.0 + lam * (al + be * t))
    if np.any(lo <= 0.0):
        raise IndefinitePerturbation(f"g_lam loses positivity at lam={lam:g}")


@dataclass
class VariationResult:
    x: np.ndarray
    dscal_closed: np.ndarray
    dscal_fd: np.ndarray
    rel_err: np.ndarray
    lam_step: np.ndarray  # per point
    method: str

    @property
    def max_rel_err(self) -> float:
        return float(np.max(self.rel_err)) if self.rel_err.size else 0.0


# (relative step, Richardson levels) per curvature method
LAMBDA_SCHEME = {"analytic": (1e-3, 2), "finite-difference": (0.2, 3)}


def coefficient_size(kd: KillingData, params: DeformationParams) -> np.ndarray:
    """Rough size of ``h`` and its first t-derivative relative to ``g``."""
    t = kd.norm_sq
    (al, a1), (be, b1) = params.coefficients(t, 1)
    return 1.0 + np.abs(al) + np.abs(be) * t + (np.abs(a1) + np.abs(b1) * t) * t


def scal_variation(
    model,
    params: DeformationParams,
    x,
    method: str = "analytic",
    lam_step: float | None = None,
    killing: str = "closed",
    levels: int | None = None,
) -> VariationResult:
    """Closed-form variation of scal against a Richardson-extrapolated difference.

    ``method`` selects how the chart computes scal of the perturbed metrics
    (``"analytic"`` or ``"fd"``). ``killing`` selects the source of the Killing
    quantities feeding the closed form (``"closed"`` or ``"oracle"``). The
    lambda step defaults to a fixed fraction of the inverse coefficient size,
    so ``lam * h`` stays a small perturbation of ``g`` at every point.
    """
    if isinstance(model, ChartMetric):
        metric = model
        X = ct.as_points(x, metric.dim)
        kd = killing_data(metric, X)
    else:
        metric = model.chart()
        X = model_points(model, _radial(x))
        kd = killing_data(model, X[:, 0], killing)
    closed = dscal_closed(kd, params)

    resolved = ct._resolve_method(metric, method)
    rel, default_levels = LAMBDA_SCHEME[resolved]
    levels = default_levels if levels is None else int(levels)
    if lam_step is not None:
        steps = np.full(X.shape[0], float(lam_step))
    else:
        # one step per factor-4 bin of coefficient size, so no point is
        # differenced with a step set by a much larger neighbour
        size = coefficient_size(kd, params)
        bins = np.floor(np.log(size) / np.log(4.0))
        steps = np.empty(X.shape[0])
        for b in np.unique(bins):
            sel = bins == b
            steps[sel] = rel / float(np.max(size[sel]))
    fd = np.empty(X.shape[0])
    for h in np.unique(steps):
        sel = steps == h
        fd[sel] = _richardson(metric, params, X[sel], float(h), resolved, levels)
    err = np.abs(closed - fd) / np.maximum(1.0, np.abs(closed))
    return VariationResult(X, closed, fd, err, steps, resolved)


def _scal_at(metric, params, X, lam, method):
    check_positive(metric, params, lam, X)
    return np.atleast_1d(ct.scalar_curvature(deformed_chart(metric, params, lam), X, method).scal)


def _richardson(metric, params, X, h, method, levels):
    # central differences at h, h/2, ...; each level removes the next even power
    def central(step):
        return (_scal_at(metric, params, X, step, method) - _scal_at(metric, params, X, -step, method)) / (2.0 * step)

    table = [central(h / 2**i) for i in range(levels)]
    for j in range(1, levels):
        table = [(4**j * table[i + 1] - table[i]) / (4**j - 1) for i in range(len(table) - 1)]
    return table[0]


# ---------------------------------------------------------------------------
# Conformal changes


def conformal_scal(metric: ChartMetric, fexp: ScalarField, x, method: str = "auto") -> np.ndarray:
    """Scalar curvature of ``e^{2f} g`` by the transformation formula."""
    X = ct.as_points(x, metric.dim)
    n = metric.dim
    f = np.asarray(fexp.value(X), dtype=float)
    scal = np.atleast_1d(ct.scalar_curvature(metric, X, method).scal)
    lap = np.atleast_1d(ct.laplacian(metric, fexp, X, method))
    df2 = np.atleast_1d(ct.differential_norm_sq(metric, fexp, X, method))
    out = np.exp(-2.0 * f) * (scal + 2.0 * (n - 1) * lap - (n - 2) * (n - 1) * df2)
    return ct._squeeze(x, out)


def conformal_chart(metric: ChartMetric, fexp: ScalarField) -> ChartMetric:
    """``e^{2f} g`` as a chart (finite-difference derivatives)."""

    def g(X):
        return np.exp(2.0 * np.asarray(fexp.value(X)))[:, None, None] * metric.components(X)

    return ChartMetric(
        dim=metric.dim,
        coords=metric.coords,
        bounds=metric.bounds,
        g=g,
        periodic=metric.periodic,
        killing_index=metric.killing_index,
        name=f"exp(2{fexp.name}){metric.name}",
        fd_step=metric.fd_step,
    )


def stereographic_factor() -> ScalarField:
    """``f`` with ``e^{2f} = 4/(1+|x|^2)^2`` on the plane: the unit sphere."""

    def value(X):
        return np.log(2.0) - np.log1p(np.sum(X**2, axis=1))

    def grad(X):
        w = 1.0 + np.sum(X**2, axis=1)
        return -2.0 * X / w[:, None]

    def hess(X):
        w = 1.0 + np.sum(X**2, axis=1)
        n = X.shape[1]
        return -2.0 * np.eye(n)[None] / w[:, None, None] + 4.0 * X[:, :, None] * X[:, None, :] / w[:, None, None] ** 2

    return ScalarField(value, grad, hess, "stereo")


@dataclass(frozen=True)
class Submanifold:
    """Closed submanifold ``W`` described by its squared distance field.

    ``sqdist`` must be smooth on ``{reach(x)}``, the tubular neighbourhood
    where the nearest-point projection is unique.
    """

    dim: int
    sqdist: ScalarField
    reach: Callable[[np.ndarray], np.ndarray]
    name: str = "W"


def point_in_flat(center) -> Submanifold:
    c = np.asarray(center, dtype=float)
    n = c.size
    sq = ScalarField(
        lambda X: np.sum((X - c) ** 2, axis=1),
        lambda X: 2.0 * (X - c),
        lambda X: np.broadcast_to(2.0 * np.eye(n), (X.shape[0], n, n)).copy(),
        "|x-c|^2",
    )
    return Submanifold(0, sq, lambda X: np.ones(X.shape[0], dtype=bool), "point")


def linear_subspace_in_flat(n: int, k: int) -> Submanifold:
    """``W = R^k x {0}`` inside flat ``R^n``."""
    P = np.diag([0.0] * k + [1.0] * (n - k))
    sq = ScalarField(
        lambda X: np.sum((X @ P) ** 2, axis=1),
        lambda X: 2.0 * X @ P,
        lambda X: np.broadcast_to(2.0 * P, (X.shape[0], n, n)).copy(),
        f"dist^2(R^{k})",
    )
    return Submanifold(k, sq, lambda X: np.ones(X.shape[0], dtype=bool), f"R^{k}")


def sphere_equator() -> Submanifold:
    """The equator ``{r = pi/2}`` of the unit sphere in the ``(r, phi)`` chart."""
    half = np.pi / 2.0
    sq = ScalarField(
        lambda X: (X[:, 0] - half) ** 2,
        lambda X: np.stack([2.0 * (X[:, 0] - half), np.zeros(X.shape[0])], axis=1),
        lambda X: np.broadcast_to(np.diag([2.0, 0.0]), (X.shape[0], 2, 2)).copy(),
        "(r-pi/2)^2",
    )
    return Submanifold(1, sq, lambda X: np.abs(X[:, 0] - half) < half, "equator")


@dataclass
class BumpResult:
    psi: np.ndarray
    delta_psi: np.ndarray
    scal: np.ndarray


def _times(a: ScalarField, b: ScalarField, name: str) -> ScalarField:
    def value(X):
        return np.asarray(a.value(X)) * np.asarray(b.value(X))

    if not (a.has_analytic and b.has_analytic):
        return ScalarField(value, name=name)

    def grad(X):
        return np.asarray(a.value(X))[:, None] * b.grad(X) + np.asarray(b.value(X))[:, None] * a.grad(X)

    def hess(X):
        ga, gb = a.grad(X), b.grad(X)
        return (
            np.asarray(a.value(X))[:, None, None] * b.hess(X)
            + np.asarray(b.value(X))[:, None, None] * a.hess(X)
            + ga[:, :, None] * gb[:, None, :]
            + gb[:, :, None] * ga[:, None, :]
        )

    return ScalarField(value, grad, hess, name)


def constant_field(c: float, n: int) -> ScalarField:
    return ScalarField(
        lambda X: np.full(X.shape[0], float(c)),
        lambda X: np.zeros((X.shape[0], n)),
        lambda X: np.zeros((X.shape[0], n, n)),
        f"{c:g}",
    )


def bump_field(W: Submanifold, Lam: float, chi: ScalarField, delta: float) -> ScalarField:
    """``psi = -Lam * chi * delta * dist^2(., W)``."""
    prod = _times(chi, W.sqdist, f"chi*{W.sqdist.name}")
    c = -float(Lam) * float(delta)
    return ScalarField(
        lambda X: c * np.asarray(prod.value(X)),
        (lambda X: c * prod.grad(X)) if prod.has_analytic else None,
        (lambda X: c * prod.hess(X)) if prod.has_analytic else None,
        "psi",
    )


def conformal_bump(
    metric: ChartMetric,
    W: Submanifold,
    Lam: float,
    chi: ScalarField | None,
    delta: float,
    x,
    method: str = "auto",
) -> BumpResult:
    """Value and Laplacian of the bump ``psi``, and scal of ``e^{2 psi} g``."""
    X = ct.as_points(x, metric.dim)
    if not np.all(W.reach(X)):
        raise DistanceFieldUnavailable(f"points outside the tubular neighbourhood of {W.name}")
    chi = chi if chi is not None else constant_field(1.0, metric.dim)
    psi = bump_field(W, Lam, chi, delta)
    val = np.asarray(psi.value(X), dtype=float)
    lap = np.atleast_1d(ct.laplacian(metric, psi, X, method))
    scal = np.atleast_1d(conformal_scal(metric, psi, X, method))
    return BumpResult(val, lap, scal)
