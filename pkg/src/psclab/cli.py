"""Command-line harness: ``psclab verify | flow | figure | submersion``.

Each subcommand reads a JSON config (defaults merged with ``--config``),
runs a list of checks, and writes ``<command>_report.json`` and
``<command>_report.csv`` into ``--out``. Exit codes: 0 when every row
passes, 1 when some row fails, 2 on configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from . import chart as ct
from . import config as cf
from . import embed as em
from . import flow as fl
from . import killing as kc
from . import submersion as sb
from .errors import ConfigError, PscLabError
from .jets import Fn
from .models import CapParams, ProfileMetric, cap_normal_chart, flat_chart, round_sphere

COMMANDS = ("verify", "flow", "figure", "submersion")

ANCHORS = {
    "variation-formula": "d/dlam scal(g_lam) = -alpha scal + 2((n-1)alpha'+beta't+beta) ric(X,X)"
    " - (2(n-1)alpha'+2beta't+3beta)|nabla X|^2 - (4(n-1)alpha''+4beta''t+10beta')|nabla_X X|^2",
    "laplacian-identity": "Delta alpha(|X|^2) = 2alpha'(ric(X,X) - |nabla X|^2) - 4alpha''|nabla_X X|^2",
    "laplacian-worked-value": "Delta sin^2 r = 2 - 6cos^2 r on the unit sphere",
    "conformal-specialization": "beta = 0: d/dlam scal = -alpha scal + 2(n-1)alpha'(ric(X,X) - |nabla X|^2)"
    " - 4(n-1)alpha''|nabla_X X|^2",
    "pure-beta-specialization": "alpha = 0: d/dlam scal = 2(beta't+beta) ric(X,X) - (2beta't+3beta)|nabla X|^2"
    " - (4beta''t+10beta')|nabla_X X|^2",
    "killing-estimate": "|X|^2 |nabla X|^2 - 2|nabla_X X|^2 >= 0",
    "killing-saturation": "|X|^2 |nabla X|^2 = 2|nabla_X X|^2 on surfaces",
    "killing-skew": "<X, nabla_X X> = 0",
    "killing-data": "closed-form Killing quantities = chart contractions",
    "ricci-free-bound": "(n-1)alpha'+beta't+beta = 0, beta' <= 0 => d/dlam scal <= -alpha scal + (n-1)alpha'|nabla X|^2",
    "scal-decrease": "alpha = C + (eps/(n-1))/(t+eps), beta = 1/(t+eps), scal >= 0 => d/dlam scal <= -C scal",
    "s1-invariance": "L_X g_lam = 0",
    "stereographic-scal": "scal(4/(1+|x|^2)^2 |dx|^2) = 2",
    "bump-laplacian": "Delta psi|_W = 2 Lam (n - dim W), psi = -Lam chi delta dist^2(., W)",
    "bump-scal": "scal(e^{2psi} g)|_W = scal_g + 2(n-1) Delta psi",
    "jet1-fixed-point": "cap metric agrees with the flat metric to first order at a codimension-2 fixed point",
    "jet1-control": "a scaled flat metric differs at order zero",
    "flow-integration": "a' = -(ca + qa^2)/(qa + eps), b' = -cb/(qa + eps), c = eps/(n-1), q = |X|^2",
    "flow-canonical": "eps = 0: a = e^{-s}, b = 1",
    "flow-fixed-point": "q = 0: a = b = e^{-s/(n-1)}",
    "flow-monotone": "scal > 0 and d/ds scal >= 0 along the path",
    "blend-positivity": "chi-blend of the eps-path with the canonical variation keeps scal > 0",
    "blend-canonical-band": "blend equals the canonical variation where chi = 1",
    "cone-factor": "eps = 0: cone factor at the poles is e^{-s/2}",
    "pole-smoothness": "eps > 0: df/drho = 1 at the poles",
    "mesh-circumference": "ring perimeter = 2 pi f",
    "isometry-residual": "(df/drho)^2 + (dz/drho)^2 = 1",
    "figure-files": "one OBJ and one CSV per (eps, s)",
    "berger-scal": "scal(Berger tau) = 8 - 2tau",
    "oneill-monotone": "scal_base + scal_fibre/tau - tau|A|^2 non-increasing in tau",
    "a-norm-variation": "|A|^2_{g_tau} = tau |A|^2_g",
    "meancurv-horizontal": "H of a boundary with horizontal normal is independent of tau",
    "meancurv-vertical": "H of a boundary with vertical normal = H of the fibre boundary",
    "cap-boundary-H": "H(s) = e^{s/2} cot(rho/sigma)/sigma",
    "cap-fiber-scal": "scal of the rescaled cap = 2e^s/sigma^2",
    "cap-threshold": "s0 = 2 ln(H_target sigma tan(rho/sigma))",
    "cap-threshold-monotone": "s0 non-decreasing in H_target",
}

REPORT_FIELDS = ("check", "model", "anchor", "max_error", "threshold", "passed", "detail")


@dataclass
class CheckRow:
    check: str
    model: str
    anchor: str
    max_error: float | None
    threshold: float
    passed: bool
    detail: str = ""


@dataclass
class Check:
    check: str
    model: str
    threshold: float
    run: Callable[[], tuple]


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def execute(check: Check) -> CheckRow:
    """Run one check; module errors become failing rows, I/O errors propagate."""
    family = check.check.split("/")[0]
    anchor = ANCHORS.get(family, family)
    try:
        out = check.run()
    except OSError:
        raise
    except (PscLabError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return CheckRow(check.check, check.model, anchor, None, check.threshold, False, f"{type(exc).__name__}: {exc}")
    err, passed = float(out[0]), bool(out[1])
    detail = out[2] if len(out) > 2 else ""
    return CheckRow(check.check, check.model, anchor, _clean(err), check.threshold, passed and math.isfinite(err), detail)


def run_checks(checks: Sequence[Check], jobs: int = 1) -> list[CheckRow]:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(execute, checks))
    else:
        rows = [execute(c) for c in checks]
    return sorted(rows, key=lambda r: (r.check, r.model))


def _bound(err: float, threshold: float, detail: str = "") -> tuple:
    return err, err <= threshold, detail


@dataclass
class VerificationReport:
    command: str
    rows: list[CheckRow]
    environment: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def summary(self) -> dict:
        n_pass = sum(r.passed for r in self.rows)
        return {"total": len(self.rows), "passed": n_pass, "failed": len(self.rows) - n_pass, "ok": self.passed}

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "summary": self.summary,
            "environment": self.environment,
            "rows": [asdict(r) for r in self.rows],
        }

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jpath = out / f"{self.command}_report.json"
        jpath.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n")
        cpath = out / f"{self.command}_report.csv"
        with cpath.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_FIELDS)
            for r in self.rows:
                err = "" if r.max_error is None else repr(r.max_error)
                w.writerow([r.check, r.model, r.anchor, err, repr(r.threshold), int(r.passed), r.detail])
        return jpath, cpath


def environment(cfg: dict, command: str) -> dict:
    return {
        "package": "psclab",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": cfg["seed"],
        "config": cfg[command],
    }


def _model_label(spec: dict, model) -> str:
    return spec.get("name", getattr(model, "name", spec["type"]))


# ---------------------------------------------------------------------------
# verify


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b)))) if a.size else 0.0


def _verify_model_checks(model, label: str, spec: dict, vc: dict, seed: int, index: int) -> list[Check]:
    rng = np.random.default_rng([seed, index])
    lo, hi = cf.model_range(model, spec.get("margin", 0.05))
    r = np.sort(lo + (hi - lo) * rng.random(vc["points"]))
    pairs = kc.random_family(seed, vc["pairs"])
    n = model.n if not isinstance(model, ProfileMetric) else 2
    checks: list[Check] = []

    def variation(method, tol):
        def run():
            err = max(kc.scal_variation(model, p, r, method).max_rel_err for p in pairs)
            return _bound(err, tol, f"{len(pairs)} pairs x {r.size} points")
        return run

    checks.append(Check("variation-formula/analytic", label, vc["tol"], variation("analytic", vc["tol"])))
    checks.append(Check("variation-formula/fd", label, vc["tol_fd"], variation("fd", vc["tol_fd"])))

    def laplacian():
        metric = model.chart()
        X = kc.model_points(model, r)
        err = max(
            _rel(kc.delta_of_alpha(model, p.alpha, r), kc.delta_of_alpha_oracle(metric, p.alpha, X, "analytic"))
            for p in pairs
        )
        return _bound(err, vc["tol_delta"])

    checks.append(Check("laplacian-identity", label, vc["tol_delta"], laplacian))

    def specialization(kind):
        def run():
            kd = kc.killing_data(model, r)
            err = 0.0
            for p in pairs:
                if kind == "conformal":
                    a, b = kc.dscal_closed(kd, kc.conformal(p.alpha)), kc.dscal_conformal(kd, p.alpha)
                else:
                    a, b = kc.dscal_closed(kd, kc.pure_beta(p.beta)), kc.dscal_pure_beta(kd, p.beta)
                err = max(err, _rel(a, b))
            return _bound(err, 1e-12)
        return run

    checks.append(Check("conformal-specialization", label, 1e-12, specialization("conformal")))
    checks.append(Check("pure-beta-specialization", label, 1e-12, specialization("pure_beta")))

    def estimate():
        rep = kc.killing_estimate_check(model, r, tol=vc["tol_estimate"])
        return rep.min_margin * -1.0 if rep.min_margin < 0 else 0.0, rep.passed, f"min margin {rep.min_margin:.3e}"

    checks.append(Check("killing-estimate", label, vc["tol_estimate"], estimate))
    if isinstance(model, ProfileMetric):
        def saturation():
            m = kc.killing_data(model, r).estimate_margin
            return _bound(float(np.max(np.abs(m))), vc["tol_estimate"])

        checks.append(Check("killing-saturation", label, vc["tol_estimate"], saturation))

    def killing_data():
        X = kc.model_points(model, r)
        closed = kc.killing_data(model, r)
        oracle = kc.killing_data(model.chart(), X, "oracle")
        err = max(
            _rel(getattr(closed, k), getattr(oracle, k)) for k in ("norm_sq", "ric_XX", "grad_norm_sq", "acc_norm_sq")
        )
        return _bound(err, vc["tol_delta"])

    def skew():
        kd = kc.killing_data(model.chart(), kc.model_points(model, r), "oracle")
        return _bound(float(np.max(np.abs(kd.x_dot_acc))), vc["tol_delta"])

    checks.append(Check("killing-data", label, vc["tol_delta"], killing_data))
    checks.append(Check("killing-skew", label, vc["tol_delta"], skew))

    rf = vc["ricci_free"]

    def ricci_free():
        kd = kc.killing_data(model, r)
        err, used = 0.0, 0
        for C in rf["C"]:
            for eps in rf["eps"]:
                p = kc.ricci_weg(C, eps, n)
                if not np.all(kc.ricci_free_applicable(kd, p)):
                    continue
                used += 1
                err = max(err, float(np.max(kc.dscal_closed(kd, p) - kc.ricci_free_bound(kd, p))))
        return max(err, 0.0), err <= 1e-10 and used > 0, f"{used} parameter sets"

    def scal_decrease():
        kd = kc.killing_data(model, r)
        keep = kd.scal >= 0
        err = 0.0
        for C in rf["C"]:
            for eps in rf["eps"]:
                p = kc.ricci_weg(C, eps, n)
                d = kc.dscal_closed(kd, p) + C * kd.scal
                if np.any(keep):
                    err = max(err, float(np.max(d[keep])))
        return max(err, 0.0), err <= 1e-10, f"{int(np.sum(keep))} points with scal >= 0"

    checks.append(Check("ricci-free-bound", label, 1e-10, ricci_free))
    checks.append(Check("scal-decrease", label, 1e-10, scal_decrease))

    def invariance():
        metric = model.chart()
        X = kc.model_points(model, r)
        k = metric.killing_index
        err = 0.0
        for p in pairs[:5]:
            kd = kc.killing_data(model, r)
            lam = 0.1 / float(np.max(kc.coefficient_size(kd, p)))
            deformed = kc.deformed_chart(metric, p, lam)
            Y = X.copy()
            Y[:, k] = np.mod(Y[:, k] + 1.234, 2.0 * np.pi)
            err = max(err, float(np.max(np.abs(deformed.components(X) - deformed.components(Y)))))
        return _bound(err, 1e-12)

    checks.append(Check("s1-invariance", label, 1e-12, invariance))

    for j, up in enumerate(vc["user_pairs"]):
        name = up.get("name", f"user{j}")

        def user(up=up):
            params = kc.general(cf.function_from_config(up["alpha"]), cf.function_from_config(up["beta"]))
            res = kc.scal_variation(model, params, r, "fd")
            return _bound(res.max_rel_err, vc["tol_fd"])

        checks.append(Check(f"variation-formula/{name}", label, vc["tol_fd"], user))
    return checks


def _verify_global_checks(vc: dict, seed: int) -> list[Check]:
    checks: list[Check] = []

    def worked():
        r = np.linspace(0.05, np.pi - 0.05, 100)
        val = kc.delta_of_alpha(round_sphere(1.0), Fn.identity(), r)
        return _bound(float(np.max(np.abs(val - (2.0 - 6.0 * np.cos(r) ** 2)))), 1e-10)

    checks.append(Check("laplacian-worked-value", "sphere(R=1)", 1e-10, worked))

    def stereo():
        rng = np.random.default_rng([seed, 7])
        X = rng.uniform(-1.5, 1.5, (20, 2))
        val = kc.conformal_scal(flat_chart(2), kc.stereographic_factor(), X)
        return _bound(float(np.max(np.abs(val - 2.0))), vc["tol_conformal"])

    checks.append(Check("stereographic-scal", "R^2", vc["tol_conformal"], stereo))

    def bump_point():
        X = np.array([[0.0, 0.0], [0.0, 0.0]])
        res = kc.conformal_bump(flat_chart(2), kc.point_in_flat([0.0, 0.0]), 1.5, None, 1.0, X)
        return _bound(float(np.max(np.abs(res.delta_psi - 2.0 * 1.5 * 2))), vc["tol_bump"])

    sphere = round_sphere(1.0)

    def equator_points():
        phi = np.linspace(0.5, 5.5, 5)
        return np.stack([np.full_like(phi, np.pi / 2), phi], axis=1)

    def bump_equator():
        res = kc.conformal_bump(sphere.chart(), kc.sphere_equator(), 3.0, None, 1.0, equator_points())
        return _bound(float(np.max(np.abs(res.delta_psi - 6.0))), vc["tol_bump"])

    def bump_scal():
        res = kc.conformal_bump(sphere.chart(), kc.sphere_equator(), 3.0, None, 1.0, equator_points())
        return _bound(float(np.max(np.abs(res.scal - 14.0))), vc["tol_bump"])

    checks.append(Check("bump-laplacian/point", "R^2", vc["tol_bump"], bump_point))
    checks.append(Check("bump-laplacian/equator", "sphere(R=1)", vc["tol_bump"], bump_equator))
    checks.append(Check("bump-scal/equator", "sphere(R=1)", vc["tol_bump"], bump_scal))

    cap = CapParams(1.0, 1.0)
    hw = 0.5 * cap.rho
    pts = np.array([[x, y, 0.0, 0.0] for x in (-0.3, 0.0, 0.3) for y in (-0.2, 0.25)])

    def jet1():
        rep = ct.jet1_compare(cap_normal_chart(cap, 2, hw), flat_chart(4, hw), pts, vc["tol_jet"])
        return max(rep.max_dev0, rep.max_dev1), rep.passed, f"dev0 {rep.max_dev0:.2e}, dev1 {rep.max_dev1:.2e}"

    def control():
        rep = ct.jet1_compare(flat_chart(4, hw), flat_chart(4, hw, 2.0), pts, vc["tol_jet"])
        return max(rep.max_dev0, rep.max_dev1), not rep.passed, "passes when the comparison fails"

    checks.append(Check("jet1-fixed-point", "R^2xcap", vc["tol_jet"], jet1))
    checks.append(Check("jet1-control", "2R^4", vc["tol_jet"], control))
    return checks


def cmd_verify(cfg: dict, out_dir, jobs: int = 1) -> VerificationReport:
    vc = cfg["verify"]
    if not vc["models"]:
        raise ConfigError("verify needs at least one model")
    seed = int(cfg["seed"])
    checks: list[Check] = []
    for i, spec in enumerate(vc["models"]):
        try:
            model = cf.build_model(spec)
        except ConfigError:
            raise
        except (PscLabError, ValueError) as exc:
            msg = f"{type(exc).__name__}: {exc}"
            checks.append(Check("model-construction", spec.get("name", spec["type"]), 0.0,
                                lambda msg=msg: (float("nan"), False, msg)))
            continue
        checks.extend(_verify_model_checks(model, _model_label(spec, model), spec, vc, seed, i))
    checks.extend(_verify_global_checks(vc, seed))
    report = VerificationReport("verify", run_checks(checks, jobs), environment(cfg, "verify"))
    report.write(out_dir)
    return report


# ---------------------------------------------------------------------------
# flow


def _flow_grid(model: ProfileMetric, count: int, include_poles: bool) -> np.ndarray:
    grid = np.linspace(0.0, model.L, count)
    if include_poles:
        return grid
    return grid[~model.is_pole(grid)]


def cmd_flow(cfg: dict, out_dir, jobs: int = 1) -> VerificationReport:
    fc = cfg["flow"]
    s_values = sorted(set(float(s) for s in fc["s"]))
    if not s_values:
        raise ConfigError("flow needs a non-empty s schedule")
    if s_values[0] < 0:
        raise ConfigError("flow times must be non-negative")
    if not fc["eps"]:
        raise ConfigError("flow needs at least one eps")
    model = cf.build_model(fc["model"])
    if not isinstance(model, ProfileMetric):
        raise ConfigError("flow runs on surface profile models (sphere, cap, cylinder)")
    label = _model_label(fc["model"], model)
    out = Path(out_dir)
    checks: list[Check] = []

    for eps in sorted(set(float(e) for e in fc["eps"])):
        mode = fc["endpoints"]
        include = mode == "include" or (mode == "auto" and eps > 0)
        grid = _flow_grid(model, fc["grid"], include)
        tag = f"eps={eps:g}"

        def integrate(eps=eps, grid=grid):
            flows = fl.integrate_many(fl.initial_field(model, grid, eps, tol=fc["tol"]), s_values, fc["tol"])
            fl.write_flow_csv(out / "flow" / f"eps{eps:g}.csv", flows)
            return 0.0, True, f"{len(flows)} snapshots x {grid.size} points"

        checks.append(Check("flow-integration", f"{label}/{tag}", 0.0, integrate))

        if eps == 0.0:
            def canonical(grid=grid):
                flows = fl.integrate_many(fl.initial_field(model, grid, 0.0, tol=fc["tol"]), s_values, fc["tol"])
                err = max(
                    max(float(np.max(np.abs(f.a - np.exp(-f.s)))), float(np.max(np.abs(f.b - 1.0)))) for f in flows
                )
                return _bound(err, fc["tol_check"])

            checks.append(Check("flow-canonical", f"{label}/{tag}", fc["tol_check"], canonical))
        elif include:
            def fixed_point(eps=eps, grid=grid):
                poles = model.is_pole(grid)
                flows = fl.integrate_many(fl.initial_field(model, grid[poles], eps, tol=fc["tol"]), s_values, fc["tol"])
                err = max(
                    max(float(np.max(np.abs(f.b - np.exp(-f.s)))), float(np.max(np.abs(f.a - np.exp(-f.s)))))
                    for f in flows
                )
                return _bound(err, fc["tol_check"], f"{int(np.sum(poles))} fixed points")

            checks.append(Check("flow-fixed-point", f"{label}/{tag}", fc["tol_check"], fixed_point))

        def mono(eps=eps, grid=grid):
            rep = fl.scal_along_flow(model, eps, s_values, grid, fc["tol"], fc["tol_mono"])
            err = max(0.0, -rep.min_slope)
            return err, rep.passed, f"min scal {rep.min_scal:.6g}, min slope {rep.min_slope:.6g}"

        checks.append(Check("flow-monotone", f"{label}/{tag}", fc["tol_mono"], mono))

    bc = fc.get("blend")
    if bc and any(model.pole_flags):
        grid = _flow_grid(model, fc["grid"], True)
        chi = fl.band_cutoff(model.L, tuple(bc["inner"]))
        spec = fl.BlendSpec(chi, bc["eps"], bc["s_max"], bc["depth"])
        cache: dict = {}

        def blended():
            if "res" not in cache:
                cache["res"] = fl.blended_flow(model, spec, grid, tol=fc["tol"])
            return cache["res"]

        def positivity():
            res = blended()
            return 0.0, res.min_scal > 0.0, f"eps {res.eps:g}, min scal {res.min_scal:.6g}"

        def band():
            res = blended()
            on = np.asarray(chi(grid)) == 1.0
            err = 0.0
            for sn in res.snapshots:
                err = max(err, float(np.max(np.abs(sn.recon.a[on] - np.exp(-sn.s)))),
                          float(np.max(np.abs(sn.recon.b[on] - 1.0))))
            return _bound(err, 1e-12, f"{int(np.sum(on))} band points")

        # both rows share one blended run, so keep them on the same thread
        rows = run_checks([Check("blend-positivity", label, 0.0, positivity),
                           Check("blend-canonical-band", label, 1e-12, band)], 1)
    else:
        rows = []
    rows = sorted(run_checks(checks, jobs) + rows, key=lambda r: (r.check, r.model))
    report = VerificationReport("flow", rows, environment(cfg, "flow"))
    report.write(out_dir)
    return report


# ---------------------------------------------------------------------------
# figure


def cmd_figure(cfg: dict, out_dir, jobs: int = 1) -> VerificationReport:
    gc = cfg["figure"]
    if not gc["s"] or not gc["eps"]:
        raise ConfigError("figure needs non-empty s and eps lists")
    model = round_sphere(1.0)
    out = Path(out_dir)
    checks: list[Check] = []
    written: dict = {}

    for eps in gc["eps"]:
        for s in gc["s"]:
            tag = f"eps={eps:g}/s={s:g}"

            def build(eps=eps, s=s):
                key = (eps, s)
                if key not in written:
                    prof = em.embed_profile(model, eps, s, gc["panels"])
                    path = em.figure_path(out, eps, s)
                    stats = em.export_mesh(prof, gc["n_phi"], path, gc["stride"])
                    written[key] = (prof, path, stats)
                return written[key]

            def cone(eps=eps, s=s, build=build):
                prof, _, _ = build()
                vals = np.array(list(prof.cone_report.values()))
                if eps == 0.0:
                    return _bound(float(np.max(np.abs(vals - np.exp(-0.5 * s)))), gc["tol"])
                return _bound(float(np.max(np.abs(vals - 1.0))), gc["tol_smooth"])

            def circumference(build=build):
                prof, path, _ = build()
                perims, _ = em.ring_circumferences(path, gc["n_phi"])
                idx = em._ring_indices(prof, gc["stride"])
                f = prof.f[idx]
                f = f[f > 0.0]
                err = float(np.max(np.abs(perims - 2.0 * np.pi * f) / (2.0 * np.pi * f)))
                return _bound(err, gc["tol_circumference"], f"{perims.size} rings")

            def isometry(build=build):
                prof, _, _ = build()
                return _bound(prof.isometry_residual, gc["tol_isometry"])

            if eps == 0.0:
                checks.append(Check("cone-factor", tag, gc["tol"], cone))
            else:
                checks.append(Check("pole-smoothness", tag, gc["tol_smooth"], cone))
            checks.append(Check("mesh-circumference", tag, gc["tol_circumference"], circumference))
            checks.append(Check("isometry-residual", tag, gc["tol_isometry"], isometry))

    # rows of one panel share its embedding; run panels serially for determinism of files
    rows = run_checks(checks, 1)

    def files():
        expected = len(set(gc["eps"])) * len(set(gc["s"]))
        objs = sorted((out / "fig_deform").rglob("*.obj")) if (out / "fig_deform").exists() else []
        csvs = sorted((out / "fig_deform").rglob("*.csv")) if (out / "fig_deform").exists() else []
        present = sum(em.figure_path(out, e, s).exists() for e in set(gc["eps"]) for s in set(gc["s"]))
        err = float(expected - present)
        return err, present == expected, f"{len(objs)} OBJ, {len(csvs)} CSV"

    rows = sorted(rows + [execute(Check("figure-files", "sphere(R=1)", 0.0, files))], key=lambda r: (r.check, r.model))
    report = VerificationReport("figure", rows, environment(cfg, "figure"))
    report.write(out_dir)
    return report


# ---------------------------------------------------------------------------
# submersion


def cmd_submersion(cfg: dict, out_dir, jobs: int = 1) -> VerificationReport:
    sc = cfg["submersion"]
    hopf = sb.hopf_submersion()
    checks: list[Check] = []
    table: list[list] = []

    for tau in sc["berger_tau"]:
        tag = f"tau={tau:g}"

        def berger(tau=tau):
            params = sb.CanonicalVariationParams(tau)
            oracle = sb.berger_oracle_scal(tau)
            expected = sb.oneill_scal(hopf, params)
            err = max(float(np.max(np.abs(oracle - expected))), abs(expected - (8.0 - 2.0 * tau)))
            table.append(["berger", repr(float(tau)), repr(float(np.mean(oracle))), "", "berger-scal", int(err <= sc["tol_berger"])])
            return _bound(err, sc["tol_berger"])

        def a_norm(tau=tau):
            sb.CanonicalVariationParams(tau)
            A_tau = hopf.base_scal + hopf.fiber_scal / tau - float(np.mean(sb.berger_oracle_scal(tau)))
            return _bound(abs(A_tau - sb.a_norm_variation(hopf.A_norm_sq, tau)), sc["tol_berger"])

        checks.append(Check("berger-scal", tag, sc["tol_berger"], berger))
        checks.append(Check("a-norm-variation", tag, sc["tol_berger"], a_norm))

    taus = np.linspace(1.0 / sc["tau_grid"], 1.0, sc["tau_grid"])
    models = [hopf] + [sb.cap_product_model(CapParams(c["sigma"], c["rho"])) for c in sc["caps"] if c["sigma"] > 0 and c["rho"] > 0]
    for m in models:
        def monotone(m=m):
            vals = np.array([sb.oneill_scal(m, sb.CanonicalVariationParams(t)) for t in taus])
            rise = float(np.max(np.diff(vals)))
            return max(rise, 0.0), rise <= 1e-12, f"{taus.size} tau values"

        checks.append(Check("oneill-monotone", m.name, 1e-12, monotone))

    for collar in sb.default_collars():
        def horizontal(collar=collar):
            rep = sb.mean_curvature_horizontal_normal(collar, sc["collar_tau"], sc["tol"])
            return rep.max_dev, rep.passed, f"H = {rep.reference:.12g}"

        checks.append(Check("meancurv-horizontal", collar.name, sc["tol"], horizontal))

    for c in sc["caps"]:
        cap_label = f"cap(sigma={c['sigma']:g},rho={c['rho']:g})"
        for curv in (0.0, sc["bundle_curvature"]):
            for tau in sc["collar_tau"]:
                def vertical(c=c, curv=curv, tau=tau):
                    cap = CapParams(c["sigma"], c["rho"])
                    pts = None
                    if curv == 0.0:
                        u = np.linspace(-0.6, 0.6, 5)
                        pts = np.stack([u, 0.3 * u, np.full_like(u, cap.rho), np.linspace(0.4, 5.5, 5)], axis=1)
                    rep = sb.mean_curvature_vertical_normal(cap, tau, curv, sc["tol"], pts)
                    return rep.max_dev, rep.passed

                checks.append(Check("meancurv-vertical", f"{cap_label}/c={curv:g}/tau={tau:.6g}", sc["tol"], vertical))

        for s in sc["cap_s"]:
            def boundary_H(c=c, s=s):
                cap = CapParams(c["sigma"], c["rho"])
                q = sb.cap_quantities(cap, s)
                metric = sb.disk_bundle_chart(cap, float(np.exp(-s)), 0.0)
                u = np.linspace(-0.5, 0.5, 4)
                X = np.stack([u, -u, np.full_like(u, cap.rho), np.linspace(0.5, 5.0, 4)], axis=1)
                H = np.atleast_1d(ct.hypersurface_mean_curvature(metric, X, 2, 1, "fd"))
                err = float(np.max(np.abs(H - q.H_boundary)))
                table.append([cap_label, repr(float(s)), repr(q.scal_fiber), repr(q.H_boundary), "cap-boundary-H",
                              int(err <= sc["tol_cap"])])
                return _bound(err, sc["tol_cap"])

            def fiber_scal(c=c, s=s):
                cap = CapParams(c["sigma"], c["rho"])
                q = sb.cap_quantities(cap, s)
                metric = sb.disk_bundle_chart(cap, float(np.exp(-s)), 0.0)
                X = np.array([[0.1, -0.2, 0.5 * cap.rho, 1.0], [0.0, 0.3, 0.8 * cap.rho, 4.0]])
                scal = np.atleast_1d(ct.scalar_curvature(metric, X, "fd").scal)
                return _bound(_rel(scal, np.full_like(scal, q.scal_fiber)), sc["tol_berger"])

            checks.append(Check("cap-boundary-H", f"{cap_label}/s={s:g}", sc["tol_cap"], boundary_H))
            checks.append(Check("cap-fiber-scal", f"{cap_label}/s={s:g}", sc["tol_berger"], fiber_scal))

        targets = sorted(sc["H_targets"])
        for H_t in targets:
            def threshold(c=c, H_t=H_t):
                cap = CapParams(c["sigma"], c["rho"])
                s0 = sb.cap_threshold(cap, H_t)
                H0 = sb.cap_quantities(cap, s0).H_boundary
                err = abs(H0 - H_t) if s0 > 0.0 else max(0.0, H_t - H0)
                table.append([cap_label, repr(s0), "", repr(H_t), "cap-threshold", int(err <= sc["tol_cap"])])
                return _bound(err, sc["tol_cap"], f"s0 = {s0:.12g}")

            checks.append(Check("cap-threshold", f"{cap_label}/H={H_t:g}", sc["tol_cap"], threshold))

        def threshold_monotone(c=c):
            cap = CapParams(c["sigma"], c["rho"])
            s0 = np.array([sb.cap_threshold(cap, h) for h in targets])
            drop = float(-np.min(np.diff(s0))) if s0.size > 1 else 0.0
            return max(drop, 0.0), drop <= 0.0, " ".join(f"{v:.6g}" for v in s0)

        checks.append(Check("cap-threshold-monotone", cap_label, 0.0, threshold_monotone))

    rows = run_checks(checks, jobs)
    report = VerificationReport("submersion", rows, environment(cfg, "submersion"))
    report.write(out_dir)
    out = Path(out_dir)
    with (out / "submersion_table.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_id", "tau_or_s", "scal", "H", "check_name", "pass"])
        for row in sorted(table):
            w.writerow(row)
    return report


# ---------------------------------------------------------------------------
# entry point

HANDLERS = {"verify": cmd_verify, "flow": cmd_flow, "figure": cmd_figure, "submersion": cmd_submersion}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psclab", description="Numerical checks for circle-invariant psc deformations.")
    p.add_argument("--print-schema", action="store_true", help="print the JSON config schema and exit")
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} suite")
        sp.add_argument("--config", type=Path, help="JSON config merged over the defaults")
        sp.add_argument("--out", type=Path, default=Path("psclab_out"), help="output directory")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--tol", type=float, help=f"override {name}.tol")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.print_schema:
        print(cf.schema_json())
        return 0
    if args.command is None:
        build_parser().print_usage(sys.stderr)
        return 2
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.tol is not None:
        overrides[args.command] = {"tol": args.tol}
    try:
        cfg = cf.load_config(args.config, overrides)
        args.out.mkdir(parents=True, exist_ok=True)
        report = HANDLERS[args.command](cfg, args.out, max(1, args.jobs))
    except ConfigError as exc:
        print(f"psclab: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"psclab: I/O error: {exc}", file=sys.stderr)
        return 2
    s = report.summary
    for r in report.rows:
        if not r.passed:
            print(f"FAIL {r.check} [{r.model}] error={r.max_error} threshold={r.threshold} {r.detail}")
    print(f"{args.command}: {s['passed']}/{s['total']} checks passed -> {args.out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
