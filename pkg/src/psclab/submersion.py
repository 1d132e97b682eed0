"""Riemannian submersions with totally geodesic fibres.

The canonical variation ``g_tau = tau g_V + g_H`` only enters through three
invariants (base scal, fibre scal and ``|A|^2``), so models are described
by those numbers. Two explicit charts back them up: the Berger sphere and a
disk bundle over the plane with a curved connection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from . import chart as ct
from .chart import ChartMetric
from .errors import NonPositiveTau
from .models import CapParams, DoublyWarpedMetric, ProfileMetric, berger_chart

Scalar = Union[float, Callable[[np.ndarray], np.ndarray]]


def _eval(v: Scalar, pt):
    return v(pt) if callable(v) else float(v)


@dataclass(frozen=True)
class SubmersionModel:
    base_scal: Scalar
    fiber_scal: Scalar
    A_norm_sq: float
    base_dim: int
    fiber_dim: int
    name: str = "submersion"

    def __post_init__(self):
        if self.A_norm_sq < 0:
            raise ValueError("|A|^2 must be non-negative")
        if self.base_dim < 1 or self.fiber_dim < 1:
            raise ValueError("base and fibre dimensions must be positive")


@dataclass(frozen=True)
class CanonicalVariationParams:
    tau: float

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise NonPositiveTau(f"tau must be positive, got {self.tau}")


def a_norm_variation(A_norm_sq_at_1: float, tau: float) -> float:
    """``|A|^2`` of ``g_tau`` measured in ``g_tau``: linear in ``tau``."""
    if A_norm_sq_at_1 < 0:
        raise ValueError("|A|^2 must be non-negative")
    CanonicalVariationParams(tau)
    return float(tau) * float(A_norm_sq_at_1)


def oneill_scal(model: SubmersionModel, params: CanonicalVariationParams, base_pt=None) -> float:
    """``scal_base + scal_fibre / tau - tau |A|^2``."""
    tau = params.tau
    return (
        _eval(model.base_scal, base_pt)
        + _eval(model.fiber_scal, base_pt) / tau
        - a_norm_variation(model.A_norm_sq, tau)
    )


def hopf_submersion() -> SubmersionModel:
    """``S^3 -> S^2(1/2)``: base scal 8, flat circle fibres, ``|A|^2 = 2``."""
    return SubmersionModel(8.0, 0.0, 2.0, 2, 1, "hopf")


def calibrate_A_norm_sq(total_scal: float, base_scal: float, fiber_scal: float) -> float:
    """``|A|^2`` at ``tau = 1`` from a measured total scal."""
    return base_scal + fiber_scal - total_scal


def berger_oracle_scal(tau: float, points=None, method: str = "auto") -> np.ndarray:
    """scal of the explicit Berger chart at ``points`` (default: a few interior points)."""
    c = berger_chart(tau)
    if points is None:
        t = np.linspace(0.2, 1.3, 7)
        points = np.stack([t, np.full_like(t, 1.0), np.full_like(t, 2.0)], axis=1)
    return np.atleast_1d(ct.scalar_curvature(c, points, method).scal)


def cap_product_model(cap: CapParams, base_scal: float = 2.0, base_dim: int = 2) -> SubmersionModel:
    """Product of a base with a cap fibre; the A-tensor vanishes."""
    return SubmersionModel(base_scal, 2.0 / cap.sigma**2, 0.0, base_dim, 2, "cap-product")


# ---------------------------------------------------------------------------
# Boundary mean curvature


@dataclass
class BoundaryData:
    which: str
    H: float
    fiber_H: float | None = None


@dataclass
class MeanCurvatureCheck:
    name: str
    values: dict
    reference: float | None
    max_dev: float
    tol: float
    passed: bool


def vertical_rescale(metric: ChartMetric, tau: float) -> ChartMetric:
    """Canonical variation of the circle action: ``g + (tau - 1) w (x) w / |X|^2``.

    Vertical is the span of the Killing coordinate field; only the metric
    components are supplied, derivatives come from finite differences.
    """
    CanonicalVariationParams(tau)
    k = metric.killing_index
    if k is None:
        raise ValueError(f"{metric.name} declares no vertical field")

    def g(X):
        G = metric.components(X)
        w = G[:, :, k]
        return G + (tau - 1.0) * w[:, :, None] * w[:, None, :] / G[:, k, k][:, None, None]

    return ChartMetric(
        dim=metric.dim,
        coords=metric.coords,
        bounds=metric.bounds,
        g=g,
        periodic=metric.periodic,
        killing_index=k,
        name=f"{metric.name}[tau={tau:g}]",
        fd_step=metric.fd_step,
    )


@dataclass(frozen=True)
class Collar:
    """Boundary ``{x^0 = boundary}`` of a chart, with the side the collar lies on."""

    metric: ChartMetric
    boundary: float
    outward: int
    name: str

    def boundary_points(self, count: int = 5) -> np.ndarray:
        c = self.metric
        X = np.empty((count, c.dim))
        X[:, 0] = self.boundary
        for i in range(1, c.dim):
            lo, hi = c.bounds[i]
            X[:, i] = np.linspace(lo, hi, count + 2)[1:-1] if not c.periodic[i] else np.linspace(0.3, 5.9, count)
        return X


def profile_collar(model: ProfileMetric, interval: tuple[float, float], boundary: float, name: str) -> Collar:
    """Restrict a profile surface to ``interval`` and pick one end as boundary."""
    from dataclasses import replace

    lo, hi = interval
    base = model.chart()
    # widen the chart so that centred stencils at the boundary stay inside
    pad = 0.05 * (hi - lo)
    chart = replace(base, bounds=np.array([[lo - pad, hi + pad], base.bounds[1]]))
    outward = 1 if boundary == hi else -1
    return Collar(chart, float(boundary), outward, name)


def warped_collar(model: DoublyWarpedMetric, boundary: float, name: str) -> Collar:
    t0, t1 = model.interval
    outward = 1 if boundary >= 0.5 * (t0 + t1) else -1
    return Collar(model.chart(), float(boundary), outward, name)


def default_collars() -> list[Collar]:
    from . import jets
    from .jets import Fn
    from .models import doubly_warped, flat_cylinder, round_sphere

    return [
        profile_collar(flat_cylinder(1.2), (0.0, 1.0), 1.0, "flat-cylinder"),
        warped_collar(
            doubly_warped(3, (0.0, 1.2), Fn(lambda t: 2.0 + t, "2+t"), Fn.const(1.0), 0.0, "warped-2+t"),
            1.0,
            "warped-2+t",
        ),
        profile_collar(round_sphere(1.0), (np.pi / 4, np.pi / 2), np.pi / 4, "sphere-collar"),
    ]


def collar_mean_curvature(collar: Collar, tau: float, count: int = 5) -> np.ndarray:
    metric = vertical_rescale(collar.metric, tau)
    X = collar.boundary_points(count)
    return np.atleast_1d(ct.hypersurface_mean_curvature(metric, X, 0, collar.outward, "fd"))


def mean_curvature_horizontal_normal(collar: Collar, tau_list: Sequence[float], tol: float = 1e-8) -> MeanCurvatureCheck:
    """``H`` of a boundary with horizontal normal under several ``tau``; all must agree."""
    vals = {float(t): collar_mean_curvature(collar, t) for t in tau_list}
    ref = vals[float(tau_list[0])]
    dev = max(float(np.max(np.abs(v - ref))) for v in vals.values())
    spread = max(float(np.ptp(v)) for v in vals.values())
    dev = max(dev, spread)
    return MeanCurvatureCheck(
        collar.name, {k: float(np.mean(v)) for k, v in vals.items()}, float(np.mean(ref)), dev, tol, dev <= tol
    )


def disk_bundle_chart(cap: CapParams, tau: float = 1.0, curvature: float = 0.0, half_width: float = 1.0) -> ChartMetric:
    """Cap-fibre disk bundle over the flat plane, canonically varied by ``tau``.

    Coordinates ``(x, y, r, phi)``; metric
    ``dx^2 + dy^2 + tau (dr^2 + f(r)^2 (dphi + A)^2)`` with the rotation
    connection ``A = (c/2)(x dy - y dx)`` of constant curvature ``c``. Fibres
    are totally geodesic and the boundary ``{r = rho}`` has vertical normal.
    """
    CanonicalVariationParams(tau)
    s, rho = float(cap.sigma), float(cap.rho)
    c = float(curvature)

    def g(X):
        x, y, r = X[:, 0], X[:, 1], X[:, 2]
        f2 = (s * np.sin(r / s)) ** 2
        A = np.stack([-0.5 * c * y, 0.5 * c * x], axis=1)
        G = np.zeros((X.shape[0], 4, 4))
        G[:, 0, 0] = 1.0
        G[:, 1, 1] = 1.0
        G[:, 2, 2] = tau
        G[:, 3, 3] = tau * f2
        for i in range(2):
            G[:, i, 3] = G[:, 3, i] = tau * f2 * A[:, i]
            for j in range(2):
                G[:, i, j] += tau * f2 * A[:, i] * A[:, j]
        return G

    return ChartMetric(
        dim=4,
        coords=("x", "y", "r", "phi"),
        bounds=[[-half_width, half_width], [-half_width, half_width], [0.0, 1.1 * rho], [0.0, 2 * np.pi]],
        g=g,
        periodic=(False, False, False, True),
        killing_index=3,
        name=f"disk-bundle(c={c:g},tau={tau:g})",
    )


def disk_bundle_A_norm_sq(cap: CapParams, r, curvature: float) -> np.ndarray:
    """``|A|^2`` of the disk bundle at ``tau = 1``: ``c^2 f(r)^2 / 2``."""
    f = cap.sigma * np.sin(np.asarray(r, dtype=float) / cap.sigma)
    return 0.5 * float(curvature) ** 2 * f**2


def disk_bundle_model(cap: CapParams, r, curvature: float) -> SubmersionModel:
    """O'Neill data of the disk bundle along the fibre circle of radius ``r``."""
    return SubmersionModel(
        0.0, 2.0 / cap.sigma**2, float(disk_bundle_A_norm_sq(cap, r, curvature)), 2, 2, "disk-bundle"
    )


def fiber_boundary_mean_curvature(cap: CapParams, tau: float = 1.0) -> float:
    """``cot(rho/sigma) / (sigma sqrt(tau))``, boundary of the rescaled cap."""
    return float(1.0 / (np.tan(cap.rho / cap.sigma) * cap.sigma * np.sqrt(tau)))


def mean_curvature_vertical_normal(
    cap: CapParams, tau: float = 1.0, curvature: float = 0.0, tol: float = 1e-8, points=None
) -> MeanCurvatureCheck:
    """Boundary ``H`` of the disk-bundle total space against the fibre boundary ``H``."""
    fiber_H = fiber_boundary_mean_curvature(cap, tau)
    if curvature == 0.0 and points is None:
        # product bundle: the total boundary is base x fibre boundary
        return MeanCurvatureCheck("product-bundle", {"total": fiber_H, "fiber": fiber_H}, fiber_H, 0.0, tol, True)
    metric = disk_bundle_chart(cap, tau, curvature)
    if points is None:
        u = np.linspace(-0.6, 0.6, 5)
        points = np.stack([u, -0.5 * u, np.full_like(u, cap.rho), np.linspace(0.4, 5.5, 5)], axis=1)
    H = np.atleast_1d(ct.hypersurface_mean_curvature(metric, points, 2, 1, "fd"))
    dev = float(np.max(np.abs(H - fiber_H)))
    return MeanCurvatureCheck(metric.name, {"total": float(np.mean(H)), "fiber": fiber_H}, fiber_H, dev, tol, dev <= tol)


# ---------------------------------------------------------------------------
# Cap bundle quantities along the canonical variation tau = exp(-s)


@dataclass
class CapBundleQuantities:
    cap: CapParams
    s: float
    scal_fiber: float
    H_boundary: float


def cap_quantities(cap: CapParams, s: float) -> CapBundleQuantities:
    return CapBundleQuantities(
        cap,
        float(s),
        2.0 * np.exp(s) / cap.sigma**2,
        float(np.exp(0.5 * s) / (np.tan(cap.rho / cap.sigma) * cap.sigma)),
    )


def cap_threshold(cap: CapParams, H_target: float) -> float:
    """Smallest ``s >= 0`` with boundary ``H >= H_target``."""
    if not H_target > 0:
        return 0.0
    return max(0.0, float(2.0 * np.log(H_target * cap.sigma * np.tan(cap.rho / cap.sigma))))
