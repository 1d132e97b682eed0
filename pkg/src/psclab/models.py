"""Closed-form circle-invariant model metrics.

Each model knows its scalar curvature in closed form and can hand out a
:class:`~psclab.chart.ChartMetric` with analytic derivatives, so every
closed-form statement can be re-derived by the chart oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from . import jets
from .chart import ChartMetric
from .errors import (
    DegenerateWarping,
    InvalidCap,
    NonPositiveRadius,
    NonPositiveTau,
)
from .jets import Fn

TWO_PI = 2.0 * np.pi


def cohomogeneity_one_chart(
    coords: tuple[str, ...],
    bounds,
    components: dict[tuple[int, int], Fn],
    periodic: tuple[bool, ...],
    killing_index: int | None = None,
    name: str = "chart",
) -> ChartMetric:
    """Chart whose components depend on the first coordinate only.

    ``components`` lists the upper-triangular entries ``(i, j) -> Fn``;
    missing entries are zero.
    """
    n = len(coords)
    comps = {}
    for (i, j), fn in components.items():
        comps[(min(i, j), max(i, j))] = fn

    def assemble(X, k):
        m = X.shape[0]
        out = np.zeros((m, n, n))
        for (i, j), fn in comps.items():
            v = fn.derivs(X[:, 0], k)[k]
            out[:, i, j] = v
            out[:, j, i] = v
        return out

    def g(X):
        return assemble(X, 0)

    def dg(X):
        out = np.zeros((X.shape[0], n, n, n))
        out[:, 0] = assemble(X, 1)
        return out

    def d2g(X):
        out = np.zeros((X.shape[0], n, n, n, n))
        out[:, 0, 0] = assemble(X, 2)
        return out

    return ChartMetric(
        dim=n,
        coords=coords,
        bounds=bounds,
        g=g,
        dg=dg,
        d2g=d2g,
        periodic=periodic,
        killing_index=killing_index,
        name=name,
    )


@dataclass(frozen=True)
class ProfileMetric:
    """Rotationally symmetric surface ``dr^2 + f(r)^2 dphi^2`` on ``[0, L]``.

    ``pole_flags`` says which ends are fixed points of the rotation. At a
    pole ``f`` vanishes and ``f'`` equals ``cone_factor`` (1 for a smooth
    pole).
    """

    kind: str
    L: float
    f: Fn
    pole_flags: tuple[bool, bool] = (False, False)
    cone_factor: float = 1.0
    name: str = "profile"
    mean_convex: bool = True

    n = 2

    def __post_init__(self):
        if self.kind not in ("sphere", "disk", "annulus"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if not 0.0 < self.cone_factor <= 1.0:
            raise ValueError("cone_factor must lie in (0, 1]")
        ends = (0.0, self.L)
        for flag, r0, sgn in zip(self.pole_flags, ends, (1.0, -1.0)):
            if not flag:
                continue
            f0, f1 = self.f.derivs(np.array([r0]), 1)
            if abs(f0[0]) > 1e-12 or abs(sgn * f1[0] - self.cone_factor) > 1e-9:
                raise DegenerateWarping(
                    f"{self.name}: pole at r={r0} needs f=0 and |f'|={self.cone_factor}"
                )
        r = np.linspace(0.0, self.L, 513)[1:-1]
        if np.any(self.f(r) <= 0.0):
            raise DegenerateWarping(f"{self.name}: warping must be positive inside")

    def warp(self, r, order: int = 2):
        return self.f.derivs(np.asarray(r, dtype=float), order)

    def is_pole(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape, dtype=bool)
        if self.pole_flags[0]:
            out |= r == 0.0
        if self.pole_flags[1]:
            out |= r == self.L
        return out

    def scal(self, r) -> np.ndarray:
        """``-2 f''/f``, with the l'Hopital limit ``-2 f'''/f'`` at poles."""
        r = np.asarray(r, dtype=float)
        f, f1, f2, f3 = self.f.derivs(r, 3)
        pole = self.is_pole(r)
        safe_f = np.where(pole, 1.0, f)
        safe_f1 = np.where(pole, f1, 1.0)
        return np.where(pole, -2.0 * f3 / safe_f1, -2.0 * f2 / safe_f)

    def chart(self) -> ChartMetric:
        return cohomogeneity_one_chart(
            ("r", "phi"),
            [[0.0, self.L], [0.0, TWO_PI]],
            {(0, 0): Fn.const(1.0), (1, 1): self.f * self.f},
            periodic=(False, True),
            killing_index=1,
            name=self.name,
        )

    def boundary_length(self) -> float:
        return float(TWO_PI * self.f(self.L))

    def boundary_mean_curvature(self) -> float:
        """``f'(L)/f(L)`` for the outer boundary circle, exterior normal ``d_r``."""
        f, f1 = self.f.derivs(np.array([self.L]), 1)
        return float(f1[0] / f[0])


def round_sphere(radius: float = 1.0) -> ProfileMetric:
    if not radius > 0:
        raise NonPositiveRadius(f"radius must be positive, got {radius}")
    R = float(radius)
    f = Fn(lambda r: R * jets.sin(r / R), f"{R:g}*sin(r/{R:g})")
    return ProfileMetric("sphere", np.pi * R, f, (True, True), name=f"sphere(R={R:g})")


@dataclass(frozen=True)
class CapParams:
    sigma: float
    rho: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise NonPositiveRadius("cap sphere radius sigma must be positive")
        if not 0.0 < self.rho < self.sigma * np.pi:
            raise InvalidCap("cap radius rho must lie in (0, sigma*pi)")

    @property
    def mean_convex(self) -> bool:
        return self.rho < self.sigma * np.pi / 2.0


def cap_metric(p: CapParams, allow_nonconvex: bool = False) -> ProfileMetric:
    """Closed rho-disk in the round 2-sphere of radius sigma."""
    if not p.mean_convex and not allow_nonconvex:
        raise InvalidCap(
            f"rho={p.rho:g} >= sigma*pi/2: boundary is not mean convex"
        )
    s = float(p.sigma)
    f = Fn(lambda r: s * jets.sin(r / s), f"{s:g}*sin(r/{s:g})")
    return ProfileMetric(
        "disk",
        float(p.rho),
        f,
        (True, False),
        name=f"cap(sigma={s:g},rho={p.rho:g})",
        mean_convex=p.mean_convex,
    )


def flat_disk(radius: float) -> ProfileMetric:
    if not radius > 0:
        raise NonPositiveRadius("radius must be positive")
    return ProfileMetric("disk", float(radius), Fn.identity(), (True, False), name="flat-disk")


def cone_disk(radius: float, angle_factor: float) -> ProfileMetric:
    c = float(angle_factor)
    return ProfileMetric(
        "disk", float(radius), Fn(lambda r: c * r, f"{c:g}*r"), (True, False), cone_factor=c,
        name=f"cone({c:g})",
    )


def flat_cylinder(length: float = 1.0) -> ProfileMetric:
    """``[0, L] x S^1`` with the unit circle: the Killing field is parallel."""
    return ProfileMetric("annulus", float(length), Fn.const(1.0), name="cylinder")


@dataclass(frozen=True)
class DoublyWarpedMetric:
    """``dt^2 + a(t)^2 dphi^2 + b(t)^2 g_F`` with ``g_F`` of constant curvature.

    The fibre ``F`` has dimension ``n - 2`` and curvature ``K_F``; its chart is
    the conformally flat one, ``4 |dy|^2 / (1 + K_F |y|^2)^2`` (just ``dy^2``
    when ``F`` is a circle, where curvature is meaningless).
    """

    n: int
    interval: tuple[float, float]
    a: Fn
    b: Fn
    K_F: float = 0.0
    name: str = "doubly-warped"

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("doubly warped models need n >= 3")
        t0, t1 = self.interval
        if not t1 > t0:
            raise ValueError("empty interval")
        # endpoints may be collapsed orbits; positivity is required inside
        t = np.linspace(t0, t1, 513)[1:-1]
        if np.any(self.a(t) <= 0.0) or np.any(self.b(t) <= 0.0):
            raise DegenerateWarping(f"{self.name}: warpings must be positive on [{t0}, {t1}]")

    @property
    def fiber_dim(self) -> int:
        return self.n - 2

    def scal(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        a, a1, a2 = self.a.derivs(t, 2)
        b, b1, b2 = self.b.derivs(t, 2)
        m = self.fiber_dim
        return (
            -2.0 * a2 / a
            - 2.0 * m * b2 / b
            - 2.0 * m * a1 * b1 / (a * b)
            + m * (m - 1) * (self.K_F - b1**2) / b**2
        )

    def ric_killing(self, t) -> np.ndarray:
        """``ric(X, X)`` for ``X = d_phi``."""
        t = np.asarray(t, dtype=float)
        a, a1, a2 = self.a.derivs(t, 2)
        b, b1 = self.b.derivs(t, 1)
        return -a * a2 - self.fiber_dim * a * a1 * b1 / b

    def chart(self) -> ChartMetric:
        m = self.fiber_dim
        n = self.n
        K = float(self.K_F)
        a_fn, b_fn = self.a, self.b

        def conformal(Y, k):
            # c(y) = 4 / (1 + K|y|^2)^2 and its first/second partials
            mm = Y.shape[0]
            if m == 1:
                return (np.ones(mm), np.zeros((mm, 1)), np.zeros((mm, 1, 1)))[: k + 1]
            w = 1.0 + K * np.sum(Y**2, axis=1)
            c = 4.0 / w**2
            dc = -16.0 * K * Y / w[:, None] ** 3
            ddc = (
                -16.0 * K * np.eye(m)[None] / w[:, None, None] ** 3
                + 96.0 * K**2 * Y[:, :, None] * Y[:, None, :] / w[:, None, None] ** 4
            )
            return (c, dc, ddc)[: k + 1]

        def g(X):
            t, Y = X[:, 0], X[:, 2:]
            (c,) = conformal(Y, 0)
            out = np.zeros((X.shape[0], n, n))
            out[:, 0, 0] = 1.0
            out[:, 1, 1] = a_fn(t) ** 2
            bb = b_fn(t) ** 2 * c
            for i in range(m):
                out[:, 2 + i, 2 + i] = bb
            return out

        def dg(X):
            t, Y = X[:, 0], X[:, 2:]
            a, a1 = a_fn.derivs(t, 1)
            b, b1 = b_fn.derivs(t, 1)
            c, dc = conformal(Y, 1)
            out = np.zeros((X.shape[0], n, n, n))
            out[:, 0, 1, 1] = 2.0 * a * a1
            for i in range(m):
                out[:, 0, 2 + i, 2 + i] = 2.0 * b * b1 * c
                for k in range(m):
                    out[:, 2 + k, 2 + i, 2 + i] = b**2 * dc[:, k]
            return out

        def d2g(X):
            t, Y = X[:, 0], X[:, 2:]
            a, a1, a2 = a_fn.derivs(t, 2)
            b, b1, b2 = b_fn.derivs(t, 2)
            c, dc, ddc = conformal(Y, 2)
            out = np.zeros((X.shape[0], n, n, n, n))
            out[:, 0, 0, 1, 1] = 2.0 * (a1**2 + a * a2)
            for i in range(m):
                d = 2 + i
                out[:, 0, 0, d, d] = 2.0 * (b1**2 + b * b2) * c
                for k in range(m):
                    out[:, 0, 2 + k, d, d] = 2.0 * b * b1 * dc[:, k]
                    out[:, 2 + k, 0, d, d] = 2.0 * b * b1 * dc[:, k]
                    for l in range(m):
                        out[:, 2 + k, 2 + l, d, d] = b**2 * ddc[:, k, l]
            return out

        t0, t1 = self.interval
        yb = [[-0.5, 0.5]] * m
        return ChartMetric(
            dim=n,
            coords=("t", "phi") + tuple(f"y{i + 1}" for i in range(m)),
            bounds=[[t0, t1], [0.0, TWO_PI]] + yb,
            g=g,
            dg=dg,
            d2g=d2g,
            periodic=(False, True) + ((True,) if m == 1 else (False,) * m),
            killing_index=1,
            name=self.name,
        )


def doubly_warped(n: int, interval, a: Fn, b: Fn, K_F: float = 0.0, name: str = "doubly-warped") -> DoublyWarpedMetric:
    return DoublyWarpedMetric(int(n), (float(interval[0]), float(interval[1])), a, b, float(K_F), name)


def round_s3_hopf_torus() -> DoublyWarpedMetric:
    """Unit 3-sphere as ``dt^2 + cos^2 t dphi^2 + sin^2 t dtheta^2``."""
    return doubly_warped(
        3, (0.0, np.pi / 2), Fn(jets.cos, "cos"), Fn(jets.sin, "sin"), 1.0, name="round-S3"
    )


@dataclass(frozen=True)
class BergerModel:
    """Hopf fibration ``S^3 -> S^2(1/2)`` with fibres rescaled by ``tau``."""

    tau: float
    base_scal: float = 8.0
    fiber_scal: float = 0.0
    # |A|^2 of the round Hopf submersion; equals base + fiber - scal(S^3) = 8 + 0 - 6
    A_norm_sq_at_1: float = 2.0

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise NonPositiveTau(f"tau must be positive, got {self.tau}")

    def chart(self) -> ChartMetric:
        return berger_chart(self.tau)


def berger_model(tau: float) -> BergerModel:
    return BergerModel(float(tau))


def berger_chart(tau: float) -> ChartMetric:
    """Berger sphere in Hopf coordinates adapted to the fibre.

    With ``z1 = cos t e^{iu}``, ``z2 = sin t e^{i(u+v)}`` the Hopf field is
    ``d_u`` (unit length on the round sphere) and the metric reads
    ``dt^2 + tau du^2 + 2 tau sin^2 t du dv + (sin^2 t + (tau-1) sin^4 t) dv^2``.
    """
    if not tau > 0:
        raise NonPositiveTau(f"tau must be positive, got {tau}")
    tau = float(tau)
    s2 = Fn(lambda t: jets.sin(t) * jets.sin(t), "sin^2")
    return cohomogeneity_one_chart(
        ("t", "u", "v"),
        [[0.0, np.pi / 2], [0.0, TWO_PI], [0.0, TWO_PI]],
        {
            (0, 0): Fn.const(1.0),
            (1, 1): Fn.const(tau),
            (1, 2): tau * s2,
            (2, 2): s2 + (tau - 1.0) * s2 * s2,
        },
        periodic=(False, True, True),
        killing_index=1,
        name=f"berger(tau={tau:g})",
    )


def flat_chart(n: int, half_width: float = 2.0, scale: float = 1.0) -> ChartMetric:
    """``scale * |dx|^2`` on the cube ``[-half_width, half_width]^n``."""
    eye = float(scale) * np.eye(n)
    return ChartMetric(
        dim=n,
        coords=tuple(f"x{i + 1}" for i in range(n)),
        bounds=[[-half_width, half_width]] * n,
        g=lambda X: np.broadcast_to(eye, (X.shape[0], n, n)).copy(),
        dg=lambda X: np.zeros((X.shape[0], n, n, n)),
        d2g=lambda X: np.zeros((X.shape[0], n, n, n, n)),
        name=f"R^{n}" if scale == 1.0 else f"{scale:g}R^{n}",
    )


def _sinc_sq_defect(u, sigma: float):
    # (sigma^2 sin^2(sqrt(u)/sigma)/u - 1)/u, smooth in u >= 0
    w2 = u / sigma**2
    series = (-1.0 / 3.0 + w2 * (2.0 / 45.0 + w2 * (-1.0 / 315.0 + w2 * (2.0 / 14175.0)))) / sigma**2
    safe = np.where(w2 > 1e-2, u, 1.0)
    w = np.sqrt(safe) / sigma
    direct = ((np.sin(w) / w) ** 2 - 1.0) / safe
    return np.where(w2 > 1e-2, direct, series)


def cap_normal_chart(cap: CapParams, base_dim: int = 2, half_width: float | None = None) -> ChartMetric:
    """Flat ``R^base_dim`` times the cap in normal coordinates around its centre.

    The cap centre is a fixed point of the rotation, so ``R^base_dim x {0}``
    is a codimension-2 fixed-point set.
    """
    s = float(cap.sigma)
    k = int(base_dim)
    n = k + 2
    hw = 0.5 * cap.rho if half_width is None else float(half_width)

    def g(X):
        Y = X[:, k:]
        u = np.sum(Y**2, axis=1)
        T = _sinc_sq_defect(u, s)
        G = np.broadcast_to(np.eye(n), (X.shape[0], n, n)).copy()
        G[:, k:, k:] += T[:, None, None] * (u[:, None, None] * np.eye(2)[None] - Y[:, :, None] * Y[:, None, :])
        return G

    return ChartMetric(
        dim=n,
        coords=tuple(f"x{i + 1}" for i in range(k)) + ("y1", "y2"),
        bounds=[[-hw, hw]] * n,
        g=g,
        name=f"R^{k}xcap(sigma={s:g})",
    )


ModelLike = ProfileMetric | DoublyWarpedMetric


def model_chart(model) -> ChartMetric:
    if isinstance(model, ChartMetric):
        return model
    return model.chart()


def model_dimension(model) -> int:
    if isinstance(model, ChartMetric):
        return model.dim
    return model.n


def radial_samples(model, count: int, margin: float) -> np.ndarray:
    """``count`` evenly spaced radial parameters keeping ``margin`` off the ends."""
    if isinstance(model, ProfileMetric):
        lo, hi = 0.0, model.L
    else:
        lo, hi = model.interval
    return np.linspace(lo + margin, hi - margin, count)


def reparametrized_profile(model: ProfileMetric, phi: Fn, dphi: Fn, name: str = "reparam") -> ChartMetric:
    """The same surface in the radial parameter ``u`` with ``r = phi(u)``.

    Gives ``phi'(u)^2 du^2 + f(phi(u))^2 dphi^2``; ``dphi`` must be ``phi'``.
    Used to check that scal is a geometric invariant.
    """
    comp = model.f.compose(phi)
    return cohomogeneity_one_chart(
        ("u", "phi"),
        [[0.0, model.L], [0.0, TWO_PI]],
        {(0, 0): dphi * dphi, (1, 1): comp * comp},
        periodic=(False, True),
        killing_index=1,
        name=name,
    )
