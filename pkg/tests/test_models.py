from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psclab import chart as ct
from psclab import jets
from psclab.errors import DegenerateWarping, InvalidCap, NonPositiveRadius, NonPositiveTau
from psclab.jets import Fn
from psclab.models import (
    CapParams,
    ProfileMetric,
    berger_chart,
    berger_model,
    cap_metric,
    cone_disk,
    doubly_warped,
    flat_cylinder,
    flat_disk,
    radial_samples,
    reparametrized_profile,
    round_s3_hopf_torus,
    round_sphere,
)

# dt^2 + (2 + sin t)^2 dphi^2 + (1 + t^2/4)^2 dpsi^2 at t = 0.7, frozen from a sympy curvature computation
WARPED_SCAL_07 = -0.58398249668061327
WARPED_RICXX_07 = 1.0728564944754866


def warped():
    return doubly_warped(3, (0.2, 1.2), Fn(lambda t: 2.0 + jets.sin(t)), Fn(lambda t: 1.0 + 0.25 * t * t))


def test_sphere_scal_and_pole_limit():
    s = round_sphere(2.0)
    r = np.array([0.0, 1.0, s.L])
    assert np.allclose(s.scal(r), 0.5)
    assert s.is_pole(r).tolist() == [True, False, True]


def test_cap_scal_is_two_over_sigma_squared():
    cap = cap_metric(CapParams(1.5, 1.0))
    assert np.allclose(cap.scal(np.array([0.0, 0.5, 1.0])), 2 / 1.5**2)
    X = np.array([[0.5, 1.0], [0.9, 2.0]])
    assert np.allclose(ct.scalar_curvature(cap.chart(), X).scal, 2 / 1.5**2)
    assert cap.boundary_mean_curvature() == pytest.approx(1 / (1.5 * np.tan(1.0 / 1.5)))


def test_cap_validation():
    with pytest.raises(NonPositiveRadius):
        CapParams(0.0, 1.0)
    with pytest.raises(InvalidCap):
        CapParams(1.0, 4.0)
    with pytest.raises(InvalidCap):
        cap_metric(CapParams(1.0, 2.0))
    assert not cap_metric(CapParams(1.0, 2.0), allow_nonconvex=True).mean_convex


def test_flat_models():
    assert np.allclose(flat_disk(1.0).scal(np.array([0.0, 0.5])), 0.0)
    cyl = flat_cylinder(2.0)
    assert cyl.boundary_length() == pytest.approx(2 * np.pi)
    assert np.allclose(cyl.scal(np.array([0.3])), 0.0)
    cone = cone_disk(1.0, 0.5)
    assert cone.cone_factor == 0.5


def test_profile_validation():
    with pytest.raises(NonPositiveRadius):
        round_sphere(-1.0)
    with pytest.raises(DegenerateWarping):
        ProfileMetric("disk", 1.0, Fn(lambda r: r + 1.0), (True, False))
    with pytest.raises(DegenerateWarping):
        ProfileMetric("annulus", 2.0, Fn(lambda r: r - 1.0))
    with pytest.raises(ValueError):
        ProfileMetric("torus", 1.0, Fn.const(1.0))


def test_doubly_warped_closed_forms_against_frozen_values():
    m = warped()
    assert m.scal(np.array([0.7]))[0] == pytest.approx(WARPED_SCAL_07, abs=1e-14)
    assert m.ric_killing(np.array([0.7]))[0] == pytest.approx(WARPED_RICXX_07, abs=1e-14)


@given(st.floats(0.25, 1.15))
def test_doubly_warped_chart_oracle(t):
    m = warped()
    X = np.array([[t, 1.0, 0.1]])
    rep = ct.scalar_curvature(m.chart(), X, "analytic")
    assert rep.scal[0] == pytest.approx(m.scal(np.array([t]))[0], abs=1e-12)
    assert rep.ricci[0, 1, 1] == pytest.approx(m.ric_killing(np.array([t]))[0], abs=1e-12)
    fd = ct.scalar_curvature(m.chart(), X, "fd")
    assert fd.scal[0] == pytest.approx(rep.scal[0], rel=1e-6, abs=1e-7)


def test_round_s3_is_constant_six():
    m = round_s3_hopf_torus()
    t = np.linspace(0.1, 1.4, 7)
    assert np.allclose(m.scal(t), 6.0)
    X = np.stack([t, np.ones_like(t), np.full_like(t, 0.2)], axis=1)
    assert np.allclose(ct.scalar_curvature(m.chart(), X).scal, 6.0, atol=1e-10)


def test_doubly_warped_validation():
    with pytest.raises(DegenerateWarping):
        doubly_warped(3, (0.0, 1.0), Fn(lambda t: t - 0.5), Fn.const(1.0))
    with pytest.raises(ValueError):
        doubly_warped(2, (0.0, 1.0), Fn.const(1.0), Fn.const(1.0))


@pytest.mark.parametrize("tau", [0.25, 0.5, 1.0, 2.0])
def test_berger_chart_scal(tau):
    t = np.linspace(0.2, 1.3, 5)
    X = np.stack([t, np.ones_like(t), np.full_like(t, 2.0)], axis=1)
    assert np.allclose(ct.scalar_curvature(berger_chart(tau), X).scal, 8 - 2 * tau, atol=1e-10)
    assert np.allclose(ct.scalar_curvature(berger_chart(tau), X, "fd").scal, 8 - 2 * tau, atol=1e-6)


def test_berger_rejects_non_positive_tau():
    with pytest.raises(NonPositiveTau):
        berger_chart(0.0)
    with pytest.raises(NonPositiveTau):
        berger_model(-1.0)


def test_scal_is_invariant_under_reparametrisation():
    s = round_sphere(1.0)
    phi = Fn(lambda u: u + 0.1 * jets.sin(2.0 * u))
    dphi = Fn(lambda u: 1.0 + 0.2 * jets.cos(2.0 * u))
    c = reparametrized_profile(s, phi, dphi)
    u = np.array([0.4, 1.1, 2.5])
    X = np.stack([u, np.ones_like(u)], axis=1)
    assert np.allclose(ct.scalar_curvature(c, X).scal, 2.0, atol=1e-10)


def test_radial_samples():
    r = radial_samples(round_sphere(1.0), 5, 0.1)
    assert r[0] == pytest.approx(0.1) and r[-1] == pytest.approx(np.pi - 0.1)
    assert radial_samples(warped(), 3, 0.0).tolist() == [0.2, 0.7, 1.2]
