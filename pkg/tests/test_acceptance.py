"""Acceptance criteria at their stated tolerances, one PASS/FAIL line each."""

from __future__ import annotations

import time

import numpy as np
from scipy.optimize import brentq

from psclab import chart as ct
from psclab import embed as em
from psclab import flow as fl
from psclab import jets
from psclab import killing as kc
from psclab import submersion as sb
from psclab.config import model_range
from psclab.jets import Fn
from psclab.models import (
    CapParams,
    ProfileMetric,
    cap_normal_chart,
    doubly_warped,
    flat_chart,
    round_s3_hopf_torus,
    round_sphere,
)

SEED = 20240917
PAIRS = 50
POINTS = 100


def acceptance_models():
    warped = doubly_warped(
        3, (0.2, 1.2), Fn(lambda t: 2.0 + jets.sin(t), "2+sin(t)"), Fn(lambda t: 1.0 + 0.25 * t * t, "1+t^2/4"),
        0.0, "warped-sin",
    )
    return [round_sphere(1.0), warped, round_s3_hopf_torus()]


def sample_radii(model, index):
    rng = np.random.default_rng([SEED, index])
    lo, hi = model_range(model, 0.05)
    return np.sort(lo + (hi - lo) * rng.random(POINTS))


def test_criterion_1_variation_formula(acceptance):
    t0 = time.perf_counter()
    pairs = kc.random_family(SEED, PAIRS)
    worst = {"analytic": 0.0, "fd": 0.0}
    for i, model in enumerate(acceptance_models()):
        r = sample_radii(model, i)
        for p in pairs:
            for method in worst:
                worst[method] = max(worst[method], kc.scal_variation(model, p, r, method).max_rel_err)
    dt = time.perf_counter() - t0
    ok = worst["analytic"] <= 1e-7 and worst["fd"] <= 1e-4 and dt <= 60.0
    acceptance(1, "variation formula vs lambda-differences", ok, dt,
               f"analytic {worst['analytic']:.2e} <= 1e-7, fd {worst['fd']:.2e} <= 1e-4, budget 60 s")
    assert ok


def test_criterion_2_laplacian_identity(acceptance):
    t0 = time.perf_counter()
    pairs = kc.random_family(SEED, PAIRS)
    err = 0.0
    for i, model in enumerate(acceptance_models()):
        r = sample_radii(model, i)
        X = kc.model_points(model, r)
        metric = model.chart()
        for p in pairs:
            closed = kc.delta_of_alpha(model, p.alpha, r)
            oracle = kc.delta_of_alpha_oracle(metric, p.alpha, X, "analytic")
            err = max(err, float(np.max(np.abs(closed - oracle) / np.maximum(1.0, np.abs(oracle)))))
    r = np.linspace(0.05, np.pi - 0.05, 100)
    worked = kc.delta_of_alpha(round_sphere(1.0), Fn.identity(), r)
    werr = float(np.max(np.abs(worked - (2.0 - 6.0 * np.cos(r) ** 2))))
    dt = time.perf_counter() - t0
    ok = err <= 1e-8 and werr <= 1e-10
    acceptance(2, "Laplacian of alpha(|X|^2)", ok, dt, f"identity {err:.2e} <= 1e-8, worked value {werr:.2e} <= 1e-10")
    assert ok


def test_criterion_3_killing_estimate(acceptance):
    t0 = time.perf_counter()
    worst, surface = np.inf, 0.0
    for i, model in enumerate(acceptance_models()):
        r = sample_radii(model, i)
        margin = kc.killing_data(model, r).estimate_margin
        X = kc.model_points(model, r)
        oracle = kc.killing_data(model.chart(), X, "oracle").estimate_margin
        worst = min(worst, float(np.min(margin)), float(np.min(oracle)))
        if isinstance(model, ProfileMetric):
            surface = max(surface, float(np.max(np.abs(margin))), float(np.max(np.abs(oracle))))
    dt = time.perf_counter() - t0
    ok = worst >= -1e-10 and surface <= 1e-10
    acceptance(3, "Killing estimate margin", ok, dt, f"min margin {worst:.2e} >= -1e-10, surface |margin| {surface:.2e}")
    assert ok


def test_criterion_4_deformation_ode(acceptance):
    t0 = time.perf_counter()
    sphere = round_sphere(1.0)
    grid = np.linspace(0.0, np.pi, 400)
    canon = fl.integrate_path(fl.initial_field(sphere, grid[1:-1], 0.0), 1.0)
    e_canon = max(float(np.max(np.abs(canon.a - np.exp(-1.0)))), float(np.max(np.abs(canon.b - 1.0))))
    e_fixed = 0.0
    for n in (2, 3, 4):
        f = fl.integrate_path(fl.initial_field(sphere, np.array([0.0, np.pi]), 1.0, n), 1.0)
        e_fixed = max(e_fixed, float(np.max(np.abs(f.b - np.exp(-1.0 / (n - 1))))))
    rep = fl.scal_along_flow(sphere, 1.0, np.linspace(0.0, 1.5, 16), grid)
    dt = time.perf_counter() - t0
    ok = e_canon <= 1e-9 and e_fixed <= 1e-9 and rep.min_scal > 0 and rep.min_slope >= -1e-6 and dt <= 30.0
    acceptance(4, "deformation ODE", ok, dt,
               f"eps=0 {e_canon:.2e}, fixed point {e_fixed:.2e}, min scal {rep.min_scal:.4g}, "
               f"min slope {rep.min_slope:.2e} >= -1e-6, budget 30 s")
    assert ok


def test_criterion_5_figure(acceptance, tmp_path):
    t0 = time.perf_counter()
    s_values, eps_values = [0.0, 0.5, 1.0, 1.5], [0.0, 1.0]
    out = em.write_figure(tmp_path / "a", s_values, eps_values, n_phi=64, panels=2000)
    cone = smooth = circ = 0.0
    for path, prof, _ in out:
        vals = np.array(list(prof.cone_report.values()))
        if prof.eps == 0.0 and prof.s > 0:
            cone = max(cone, float(np.max(np.abs(vals - np.exp(-prof.s / 2)))))
        elif prof.eps == 1.0:
            smooth = max(smooth, float(np.max(np.abs(vals - 1.0))))
        perims, radii = em.ring_circumferences(path, 64)
        f = prof.f[em._ring_indices(prof, 10)]
        f = f[f > 0]
        circ = max(circ, float(np.max(np.abs(perims - 2 * np.pi * f) / (2 * np.pi * f))))
    again = em.write_figure(tmp_path / "b", s_values, eps_values, n_phi=64, panels=2000)
    objs = sorted((tmp_path / "a").rglob("*.obj"))
    same = all(p.read_bytes() == q.read_bytes() for (p, _, _), (q, _, _) in zip(out, again))
    dt = time.perf_counter() - t0
    ok = cone <= 1e-6 and smooth <= 1e-3 and circ <= 1e-3 and len(objs) == 8 and same
    acceptance(5, "figure reproduction", ok, dt,
               f"cone {cone:.2e} <= 1e-6, pole {smooth:.2e} <= 1e-3, circumference {circ:.2e} <= 1e-3, "
               f"{len(objs)} OBJ, deterministic {same}")
    assert ok


def test_criterion_6_submersion(acceptance):
    t0 = time.perf_counter()
    berger = max(float(np.max(np.abs(sb.berger_oracle_scal(tau) - (8.0 - 2.0 * tau)))) for tau in (0.25, 0.5, 1.0, 2.0))
    taus = np.linspace(0.05, 1.0, 20)
    hopf = sb.hopf_submersion()
    mono = all(
        np.all(np.diff([sb.oneill_scal(m, sb.CanonicalVariationParams(t)) for t in taus]) < 0)
        for m in (hopf, sb.cap_product_model(CapParams(1.0, np.pi / 4)))
    )
    collar = max(
        sb.mean_curvature_horizontal_normal(c, [1.0, 0.5, 0.25, np.exp(-1.0)]).max_dev for c in sb.default_collars()
    )
    cap_H = cap_s0 = 0.0
    for cap in (CapParams(1.0, np.pi / 4), CapParams(2.0, 1.0)):
        for s in (0.0, 0.5, 1.0, 2.0):
            metric = sb.disk_bundle_chart(cap, float(np.exp(-s)))
            u = np.linspace(-0.5, 0.5, 4)
            X = np.stack([u, -u, np.full_like(u, cap.rho), np.linspace(0.5, 5.0, 4)], axis=1)
            H = ct.hypersurface_mean_curvature(metric, X, 2, 1, "fd")
            formula = np.exp(s / 2) / (np.tan(cap.rho / cap.sigma) * cap.sigma)
            cap_H = max(cap_H, float(np.max(np.abs(H - formula))))
        H0 = sb.cap_quantities(cap, 0.0).H_boundary
        for H_t in (1.5, 2.0, 4.0, 8.0):
            if H_t <= H0:
                continue
            root = brentq(lambda s: sb.cap_quantities(cap, s).H_boundary - H_t, 0.0, 50.0, xtol=1e-15)
            cap_s0 = max(cap_s0, abs(sb.cap_threshold(cap, H_t) - root))
    dt = time.perf_counter() - t0
    ok = berger <= 1e-6 and mono and collar <= 1e-8 and cap_H <= 1e-9 and cap_s0 <= 1e-9
    acceptance(6, "submersion suite", ok, dt,
               f"Berger {berger:.2e} <= 1e-6, O'Neill monotone {mono}, collar tau-spread {collar:.2e} <= 1e-8, "
               f"cap H {cap_H:.2e} <= 1e-9, threshold {cap_s0:.2e} <= 1e-9")
    assert ok


def test_criterion_7_conformal(acceptance):
    t0 = time.perf_counter()
    X = np.random.default_rng([SEED, 7]).uniform(-1.5, 1.5, (20, 2))
    stereo = float(np.max(np.abs(kc.conformal_scal(flat_chart(2), kc.stereographic_factor(), X) - 2.0)))
    point = kc.conformal_bump(flat_chart(2), kc.point_in_flat([0.0, 0.0]), 1.5, None, 1.0, np.zeros((2, 2)))
    phi = np.linspace(0.5, 5.5, 5)
    eq = np.stack([np.full_like(phi, np.pi / 2), phi], axis=1)
    equator = kc.conformal_bump(round_sphere(1.0).chart(), kc.sphere_equator(), 3.0, None, 1.0, eq)
    bump = max(float(np.max(np.abs(point.delta_psi - 2 * 1.5 * 2))), float(np.max(np.abs(equator.delta_psi - 2 * 3.0 * 1))))
    dt = time.perf_counter() - t0
    ok = stereo <= 1e-6 and bump <= 1e-8
    acceptance(7, "conformal machinery", ok, dt, f"stereographic {stereo:.2e} <= 1e-6, bump {bump:.2e} <= 1e-8")
    assert ok


def test_criterion_8_jet1(acceptance):
    t0 = time.perf_counter()
    cap = CapParams(1.0, 1.0)
    hw = 0.5 * cap.rho
    pts = np.array([[x, y, 0.0, 0.0] for x in (-0.3, 0.0, 0.3) for y in (-0.2, 0.25)])
    rep = ct.jet1_compare(cap_normal_chart(cap, 2, hw), flat_chart(4, hw), pts, 1e-9)
    control = ct.jet1_compare(flat_chart(4, hw), flat_chart(4, hw, 2.0), pts, 1e-9)
    dt = time.perf_counter() - t0
    ok = rep.passed and not control.passed
    acceptance(8, "1-jet at the fixed point", ok, dt,
               f"dev0 {rep.max_dev0:.2e}, dev1 {rep.max_dev1:.2e} <= 1e-9, scaled-flat control fails {not control.passed}")
    assert ok

