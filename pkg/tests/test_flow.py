from __future__ import annotations

import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from psclab import chart as ct
from psclab import flow as fl
from psclab.chart import ChartMetric
from psclab.errors import NotPositiveInitial, ZeroKappaZeroEps
from psclab.models import flat_disk, round_sphere

# frozen from a 30-digit mpmath Taylor integration of the pointwise system
# (n = 2, eps = 1, q = 1/2) up to s = 1
A_Q05_S1 = 0.36787944117144232
B_Q05_S1 = 0.46608721049089082


def sphere_grid(m=101):
    return np.linspace(0.0, np.pi, m)


def scipy_scales(q, n, eps, s):
    def rhs(_s, y):
        a, b = y[: q.size], y[q.size :]
        if eps == 0.0:
            return np.concatenate([-a, 0 * b])
        c = eps / (n - 1)
        D = q * a + eps
        return np.concatenate([-(c * a + q * a * a) / D, -c * b / D])

    y = solve_ivp(rhs, (0.0, s), np.ones(2 * q.size), method="DOP853", rtol=1e-13, atol=1e-14).y[:, -1]
    return y[: q.size], y[q.size :]


def test_frozen_pointwise_value():
    f0 = fl.initial_field(round_sphere(1.0), np.array([np.pi / 4]), 1.0)
    f1 = fl.integrate_path(f0, 1.0)
    assert f1.a[0] == pytest.approx(A_Q05_S1, abs=1e-11)
    assert f1.b[0] == pytest.approx(B_Q05_S1, abs=1e-11)


@given(st.floats(0.0, 4.0), st.floats(0.1, 3.0), st.integers(2, 6), st.floats(0.1, 2.0))
def test_pointwise_against_scipy(q, eps, n, s):
    f = fl.initial_field(round_sphere(2.0), np.array([2.0 * np.arcsin(min(np.sqrt(q) / 2.0, 1.0))]), eps, n)
    out = fl.integrate_path(f, s)
    a, b = scipy_scales(out.q, n, eps, s)
    assert out.a[0] == pytest.approx(a[0], rel=1e-8)
    assert out.b[0] == pytest.approx(b[0], rel=1e-8)


def test_eps_zero_closed_form():
    grid = sphere_grid()[1:-1]
    flows = fl.integrate_many(fl.initial_field(round_sphere(1.0), grid, 0.0), [0.5, 1.0, 1.5])
    for f in flows:
        assert np.allclose(f.a, np.exp(-f.s), atol=1e-9, rtol=0)
        assert np.allclose(f.b, 1.0, atol=1e-9, rtol=0)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_fixed_point_law(n):
    f = fl.integrate_path(fl.initial_field(round_sphere(1.0), np.array([0.0, np.pi]), 1.0, n), 2.0)
    assert np.allclose(f.b, np.exp(-2.0 / (n - 1)), atol=1e-9, rtol=0)
    assert np.allclose(f.a, np.exp(-2.0 / (n - 1)), atol=1e-9, rtol=0)


def test_eps_zero_at_fixed_point_is_rejected():
    with pytest.raises(ZeroKappaZeroEps):
        fl.initial_field(round_sphere(1.0), sphere_grid(), 0.0)
    with pytest.raises(ZeroKappaZeroEps):
        fl.PointwiseState(0.0, 2, 0.0)
    with pytest.raises(ValueError):
        fl.initial_field(round_sphere(1.0), sphere_grid(), -1.0)


def test_pointwise_rhs():
    da, db = fl.pointwise_rhs(fl.PointwiseState(1.0, 3, 2.0))
    # c = 1, D = 3: a' = -(1 + 1)/3, b' = -1/3
    assert (da, db) == pytest.approx((-2 / 3, -1 / 3))


def test_reconstruction_at_start_is_the_sphere():
    grid = sphere_grid()
    rec = fl.flow_reconstruction(fl.initial_field(round_sphere(1.0), grid, 1.0))
    assert np.allclose(rec.f_reconstructed, np.sin(grid), atol=1e-15)
    assert np.allclose(rec.scal, 2.0, atol=1e-12)


def test_reconstructed_scal_against_chart_oracle():
    """scal from q-sensitivities against FD curvature of the metric rebuilt by scipy."""
    eps, s = 1.0, 1.0

    def g(X):
        q = np.sin(X[:, 0]) ** 2
        a, b = scipy_scales(q, 2, eps, s)
        G = np.zeros((X.shape[0], 2, 2))
        G[:, 0, 0] = b
        G[:, 1, 1] = a * q
        return G

    chart = ChartMetric(2, ("r", "phi"), [[0.0, np.pi], [0.0, 2 * np.pi]], g, periodic=(False, True), fd_step=5e-3)
    r = np.array([0.3, 0.8, 1.4, 2.2, 2.9])
    rec = fl.flow_reconstruction(fl.integrate_path(fl.initial_field(round_sphere(1.0), r, eps), s))
    oracle = ct.scalar_curvature(chart, np.stack([r, np.ones_like(r)], 1), "fd").scal
    assert np.allclose(rec.scal, oracle, rtol=1e-6)


def test_scal_along_flow_is_positive_and_non_decreasing():
    rep = fl.scal_along_flow(round_sphere(1.0), 1.0, np.linspace(0.0, 1.5, 16), np.linspace(0.0, np.pi, 400))
    assert rep.passed
    assert rep.min_scal >= 2.0 - 1e-9
    assert rep.min_slope >= -1e-6
    with pytest.raises(NotPositiveInitial):
        fl.scal_along_flow(flat_disk(1.0), 1.0, [0.0, 1.0], np.linspace(0.0, 1.0, 10))


def test_integrate_many_ordering():
    f = fl.initial_field(round_sphere(1.0), sphere_grid(), 1.0)
    assert fl.integrate_many(f, []) == []
    with pytest.raises(ValueError):
        fl.integrate_many(f, [1.0, 0.5])
    later = fl.integrate_path(f, 1.0)
    with pytest.raises(ValueError):
        fl.integrate_path(later, 0.5)


def test_blended_flow_matches_canonical_variation_on_band():
    model = round_sphere(1.0)
    grid = sphere_grid(201)
    chi = fl.band_cutoff(model.L, (0.6, 1.0))
    assert chi(np.array([0.0, 0.3, model.L]))[0] == 0.0
    res = fl.blended_flow(model, fl.BlendSpec(chi, 1.0, 1.5, 5), grid)
    assert res.min_scal > 0.0 and res.eps == 1.0
    on = chi(grid) == 1.0
    assert on.sum() > 50
    for snap in res.snapshots:
        assert np.array_equal(snap.recon.a[on], np.full(on.sum(), np.exp(-snap.s)))
        assert np.allclose(snap.recon.b[on], 1.0, atol=1e-15, rtol=0)
        assert np.allclose(snap.recon.scal[on], 2.0, atol=1e-12)


def test_blend_schedule_halves():
    spec = fl.BlendSpec(fl.band_cutoff(np.pi, (0.6, 1.0)), 1.0, 1.0, 4)
    assert spec.schedule() == [1.0, 0.5, 0.25, 0.125]


def test_flow_csv(tmp_path):
    grid = sphere_grid(11)
    flows = fl.integrate_many(fl.initial_field(round_sphere(1.0), grid, 1.0), [0.0, 0.5])
    p = fl.write_flow_csv(tmp_path / "f.csv", flows)
    rows = list(csv.reader(p.open()))
    assert tuple(rows[0]) == fl.FLOW_CSV_HEADER
    assert len(rows) == 1 + 2 * 11
    assert float(rows[1][5]) == pytest.approx(2.0)
