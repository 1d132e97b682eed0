"""Surfaces of revolution isometric to flowed profile metrics.

A metric ``b dr^2 + h^2 dphi^2`` on a profile is realised in R^3 by the
curve ``(h, z)`` parametrised by arclength ``rho = int sqrt(b) dr`` with
``z = int sqrt(b - h_r^2) dr``. Both integrals use composite 4-point Gauss
quadrature on the radial panels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import flow as fl
from .errors import NotEmbeddable
from .models import ProfileMetric, round_sphere

GAUSS_X, GAUSS_W = np.polynomial.legendre.leggauss(4)
CONE_DELTA = 1e-3
PROFILE_CSV_HEADER = ("s", "rho", "f", "z")


@dataclass
class EmbeddingProfile:
    s: float
    eps: float
    rho: np.ndarray
    f: np.ndarray
    z: np.ndarray
    cone_report: dict = field(default_factory=dict)
    embeddable: bool = True

    @property
    def isometry_residual(self) -> float:
        d_rho = np.diff(self.rho)
        q = (np.diff(self.f) / d_rho) ** 2 + (np.diff(self.z) / d_rho) ** 2
        return float(np.max(np.abs(q - 1.0)))


def _scales(model: ProfileMetric, eps: float, s: float, r: np.ndarray, tol: float):
    """``b``, ``h`` and ``h_r`` of the flowed metric at interior radii ``r``."""
    field0 = fl.initial_field(model, r, eps, tol=tol)
    snap = fl.integrate_path(field0, s, tol) if s > 0 else field0
    rec = fl.flow_reconstruction(snap)
    return rec.b, rec.f_reconstructed, rec.h_r


def _cone_factor(model, eps, s, pole_r, direction, tol) -> float:
    # |dh/drho| at r = k*delta off the pole, extrapolated quadratically to the pole
    r = pole_r + direction * CONE_DELTA * np.array([1.0, 2.0, 3.0])
    b, _, h_r = _scales(model, eps, s, r, tol)
    v = np.abs(h_r) / np.sqrt(b)
    return float(3.0 * v[0] - 3.0 * v[1] + v[2])


def embed_profile(
    model: ProfileMetric,
    eps: float,
    s: float,
    panels: int = 2000,
    tol: float = fl.DEFAULT_TOL,
) -> EmbeddingProfile:
    """Profile curve of the path at time ``s`` as ``(rho, f, z)`` samples.

    Raises :class:`NotEmbeddable` with the offending radial interval when the
    orbit radius grows faster than arclength somewhere.
    """
    edges = np.linspace(0.0, model.L, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * GAUSS_X[None, :]).ravel()

    pole = model.is_pole(edges)
    inner_edges = edges[~pole]
    r_all = np.concatenate([nodes, inner_edges])
    b, h, h_r = _scales(model, eps, s, r_all, tol)
    nb, nh_r = b[: nodes.size], h_r[: nodes.size]

    slack = nb - nh_r**2
    bad = slack < -1e-9 * nb
    if np.any(bad):
        r_bad = nodes[bad]
        raise NotEmbeddable(
            f"|dh/drho| > 1 on r in [{r_bad.min():.6g}, {r_bad.max():.6g}]",
            (float(r_bad.min()), float(r_bad.max())),
        )
    w = (GAUSS_W[None, :] * half[:, None])
    d_rho = np.sum(w * np.sqrt(nb).reshape(panels, 4), axis=1)
    d_z = np.sum(w * np.sqrt(np.maximum(slack, 0.0)).reshape(panels, 4), axis=1)
    rho = np.concatenate([[0.0], np.cumsum(d_rho)])
    z = np.concatenate([[0.0], np.cumsum(d_z)])

    f_edges = np.zeros_like(edges)
    f_edges[~pole] = h[nodes.size:]

    cones = {}
    if model.pole_flags[0]:
        cones["start"] = _cone_factor(model, eps, s, 0.0, 1.0, tol)
    if model.pole_flags[1]:
        cones["end"] = _cone_factor(model, eps, s, model.L, -1.0, tol)
    return EmbeddingProfile(float(s), float(eps), rho, f_edges, z, cones, True)


@dataclass
class MeshStats:
    vertices: int
    quads: int
    triangles: int
    rings: int


def _ring_indices(profile: EmbeddingProfile, stride: int) -> np.ndarray:
    idx = np.arange(0, profile.rho.size, stride)
    if idx[-1] != profile.rho.size - 1:
        idx = np.append(idx, profile.rho.size - 1)
    return idx


def mesh_rings(profile: EmbeddingProfile, n_phi: int, stride: int = 10):
    """Vertex rings and pole tips of the surface of revolution."""
    if n_phi < 3:
        raise ValueError("n_phi must be at least 3")
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    rings, tips = [], {}
    for k in _ring_indices(profile, stride):
        f, z = profile.f[k], profile.z[k]
        if f == 0.0:
            tips[int(k)] = np.array([0.0, 0.0, z])
        else:
            rings.append((int(k), np.stack([f * np.cos(phi), f * np.sin(phi), np.full(n_phi, z)], axis=1)))
    return rings, tips


def export_mesh(profile: EmbeddingProfile, n_phi: int, path, stride: int = 10) -> MeshStats:
    """Write an OBJ surface of revolution and the profile CSV next to it."""
    if not profile.embeddable:
        raise NotEmbeddable("profile is not embeddable")
    path = Path(path)
    rings, tips = mesh_rings(profile, n_phi, stride)
    lines = []
    vid = {}
    count = 0
    order = sorted([(k, "ring", pts) for k, pts in rings] + [(k, "tip", p) for k, p in tips.items()], key=lambda t: t[0])
    for k, kind, pts in order:
        vid[k] = count + 1
        block = pts[None, :] if kind == "tip" else pts
        for v in block:
            lines.append(f"v {v[0]:.9f} {v[1]:.9f} {v[2]:.9f}")
        count += block.shape[0]
    quads = tris = 0
    for (k0, kind0, _), (k1, kind1, _) in zip(order[:-1], order[1:]):
        a, b = vid[k0], vid[k1]
        for j in range(n_phi):
            jn = (j + 1) % n_phi
            if kind0 == "ring" and kind1 == "ring":
                lines.append(f"f {a + j} {a + jn} {b + jn} {b + j}")
                quads += 1
            elif kind0 == "tip":
                lines.append(f"f {a} {b + jn} {b + j}")
                tris += 1
            else:
                lines.append(f"f {a + j} {a + jn} {b}")
                tris += 1
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    write_profile_csv(profile, path.with_suffix(".csv"))
    return MeshStats(count, quads, tris, len(rings))


def write_profile_csv(profile: EmbeddingProfile, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFILE_CSV_HEADER)
        for rho, f, z in zip(profile.rho, profile.f, profile.z):
            w.writerow([f"{profile.s:.10g}", f"{rho:.12g}", f"{f:.12g}", f"{z:.12g}"])
    return path


def read_obj(path):
    """Vertices and faces (1-based) of an OBJ written by :func:`export_mesh`."""
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(p) for p in parts[1:]])
    return np.array(verts), faces


def ring_circumferences(path, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    """Perimeters and mean radii of the vertex rings of an exported mesh."""
    V, _ = read_obj(path)
    perims, radii = [], []
    i = 0
    while i < len(V):
        if np.hypot(V[i, 0], V[i, 1]) == 0.0:
            i += 1
            continue
        ring = V[i : i + n_phi]
        d = np.roll(ring, -1, axis=0) - ring
        perims.append(np.sum(np.linalg.norm(d, axis=1)))
        radii.append(np.mean(np.hypot(ring[:, 0], ring[:, 1])))
        i += n_phi
    return np.array(perims), np.array(radii)


def figure_path(out_dir, eps: float, s: float) -> Path:
    return Path(out_dir) / "fig_deform" / f"eps{eps:g}" / f"s{s:g}.obj"


def write_figure(
    out_dir,
    s_values: Sequence[float] = (0.0, 0.5, 1.0, 1.5),
    eps_values: Sequence[float] = (0.0, 1.0),
    n_phi: int = 64,
    panels: int = 2000,
    stride: int = 10,
    model: ProfileMetric | None = None,
) -> list[tuple[Path, EmbeddingProfile, MeshStats]]:
    """Panel set of the deformation path of the round sphere: one OBJ per ``(eps, s)``."""
    model = model if model is not None else round_sphere(1.0)
    out = []
    for eps in eps_values:
        for s in s_values:
            prof = embed_profile(model, eps, s, panels)
            p = figure_path(out_dir, eps, s)
            out.append((p, prof, export_mesh(prof, n_phi, p, stride)))
    return out
