from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psclab import chart as ct
from psclab import submersion as sb
from psclab.errors import InvalidCap, NonPositiveTau
from psclab.models import CapParams

# FD-free reference: sympy curvature of the disk-bundle metric at
# (x, y, r) = (0.3, -0.2, 0.6), sigma = 1, tau = 1/2, c = 1
DISK_BUNDLE_SCAL = 3.9202947193095842


@given(st.floats(0.05, 20.0))
def test_oneill_hopf(tau):
    scal = sb.oneill_scal(sb.hopf_submersion(), sb.CanonicalVariationParams(tau))
    assert scal == pytest.approx(8.0 - 2.0 * tau, rel=1e-14)


@pytest.mark.parametrize("tau", [0.25, 0.5, 1.0, 2.0])
def test_berger_chart_matches_oneill(tau):
    scal = sb.berger_oracle_scal(tau, method="analytic")
    assert np.allclose(scal, 8.0 - 2.0 * tau, atol=1e-10)


def test_calibrated_hopf_a_norm():
    total = float(sb.berger_oracle_scal(1.0, method="analytic")[0])
    assert sb.calibrate_A_norm_sq(total, 8.0, 0.0) == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("tau", [0.0, -1.0, np.nan, np.inf])
def test_tau_must_be_positive(tau):
    with pytest.raises(NonPositiveTau):
        sb.CanonicalVariationParams(tau)
    with pytest.raises(NonPositiveTau):
        sb.a_norm_variation(2.0, tau)


def test_a_norm_is_linear_and_model_validates():
    assert sb.a_norm_variation(3.0, 0.5) == 1.5
    with pytest.raises(ValueError):
        sb.a_norm_variation(-1.0, 1.0)
    with pytest.raises(ValueError):
        sb.SubmersionModel(1.0, 1.0, -0.1, 2, 1)
    with pytest.raises(ValueError):
        sb.SubmersionModel(1.0, 1.0, 0.1, 0, 1)


def test_oneill_monotone_in_tau_for_cap_products():
    model = sb.cap_product_model(CapParams(1.0, np.pi / 4))
    taus = np.linspace(0.1, 3.0, 30)
    vals = [sb.oneill_scal(model, sb.CanonicalVariationParams(t)) for t in taus]
    assert np.all(np.diff(vals) < 0)


def test_disk_bundle_scal_frozen():
    cap = CapParams(1.0, 1.0)
    chart = sb.disk_bundle_chart(cap, 0.5, 1.0)
    pt = np.array([[0.3, -0.2, 0.6, 1.0]])
    fd = float(ct.scalar_curvature(chart, pt, "fd").scal[0])
    assert fd == pytest.approx(DISK_BUNDLE_SCAL, abs=1e-8)
    model = sb.disk_bundle_model(cap, 0.6, 1.0)
    assert sb.oneill_scal(model, sb.CanonicalVariationParams(0.5)) == pytest.approx(DISK_BUNDLE_SCAL, abs=1e-13)


@pytest.mark.parametrize("name,expected", [("flat-cylinder", 0.0), ("warped-2+t", 1.0 / 3.0), ("sphere-collar", -1.0)])
def test_horizontal_boundary_mean_curvature(name, expected):
    collar = {c.name: c for c in sb.default_collars()}[name]
    check = sb.mean_curvature_horizontal_normal(collar, [1.0, 0.5, 0.25, np.exp(-1.0)])
    assert check.passed, check.max_dev
    assert check.reference == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("curvature", [0.0, 1.0])
@pytest.mark.parametrize("tau", [1.0, 0.5, 0.25])
def test_vertical_boundary_mean_curvature(curvature, tau):
    cap = CapParams(1.0, np.pi / 4)
    check = sb.mean_curvature_vertical_normal(cap, tau, curvature)
    assert check.passed, check.max_dev
    assert check.reference == pytest.approx(1.0 / np.sqrt(tau))


def test_cap_quantities_and_threshold():
    cap = CapParams(1.0, np.pi / 4)
    q = sb.cap_quantities(cap, 2.0 * np.log(2.0))
    assert q.scal_fiber == pytest.approx(8.0)
    assert q.H_boundary == pytest.approx(2.0)
    assert sb.cap_threshold(cap, 2.0) == pytest.approx(2.0 * np.log(2.0), rel=1e-14)
    assert sb.cap_threshold(cap, 0.5) == 0.0
    assert sb.cap_threshold(cap, -1.0) == 0.0


@given(st.floats(0.3, 3.0), st.floats(0.05, 0.95), st.floats(0.0, 50.0))
def test_threshold_inverts_boundary_curvature(sigma, frac, H):
    cap = CapParams(sigma, frac * sigma * np.pi / 2)
    s0 = sb.cap_threshold(cap, H)
    H0 = sb.cap_quantities(cap, s0).H_boundary
    if s0 > 0:
        assert H0 == pytest.approx(H, rel=1e-10)
    else:
        assert H0 >= H - 1e-12


def test_invalid_cap():
    with pytest.raises(InvalidCap):
        CapParams(1.0, 4.0)
