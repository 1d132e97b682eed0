from __future__ import annotations

import json

import numpy as np
import pytest

from psclab import config as cf
from psclab.errors import ConfigError


def test_defaults_validate():
    cfg = cf.load_config()
    assert cfg["verify"]["pairs"] == 50
    assert cfg["figure"]["s"] == [0.0, 0.5, 1.0, 1.5]


def test_file_merges_over_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"flow": {"grid": 50}, "seed": 3}))
    cfg = cf.load_config(p)
    assert cfg["flow"]["grid"] == 50 and cfg["seed"] == 3
    assert cfg["flow"]["eps"] == [0.0, 1.0]


@pytest.mark.parametrize(
    "doc",
    [
        {"verify": {"tol": 0}},
        {"verify": {"tol": -1e-3}},
        {"flow": {"grid": 2}},
        {"unknown": 1},
        {"verify": {"models": [{"type": "torus"}]}},
        {"seed": -1},
    ],
)
def test_schema_rejects(tmp_path, doc):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ConfigError):
        cf.load_config(p)


def test_unreadable_and_malformed(tmp_path):
    with pytest.raises(ConfigError):
        cf.load_config(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        cf.load_config(p)


def test_expression_exact_derivatives():
    f = cf.expression_fn("t**2 + sin(t)")
    d = f.derivs(np.array([0.5]), 3)
    assert np.allclose([v[0] for v in d], [0.25 + np.sin(0.5), 1 + np.cos(0.5), 2 - np.sin(0.5), -np.cos(0.5)])


def test_expression_derivative_override_is_trusted():
    f = cf.expression_fn("t**2", "-2*t", "-2")
    d = f.derivs(np.array([0.5]), 2)
    assert np.allclose([v[0] for v in d], [0.25, -1.0, -2.0])


def test_constant_expression_broadcasts():
    f = cf.expression_fn("3")
    assert np.allclose(f(np.array([1.0, 2.0])), 3.0)


@pytest.mark.parametrize("src", ["__import__('os')", "t.real", "[t]", "open('x')", "t if t else 1", "'a'", "sin(t, t)"])
def test_expression_rejects_unsafe_syntax(src):
    with pytest.raises(ConfigError):
        cf.expression_fn(src)


def test_build_model_kinds():
    assert cf.build_model({"type": "sphere", "radius": 2.0}).L == pytest.approx(2 * np.pi)
    assert cf.build_model({"type": "s3"}).n == 3
    m = cf.build_model({"type": "doubly_warped", "n": 3, "interval": [0.2, 1.2], "a": "2+sin(t)", "b": "1"})
    assert m.scal(np.array([0.5])).shape == (1,)
    with pytest.raises(ConfigError):
        cf.build_model({"type": "doubly_warped", "n": 3})


def test_schema_is_json():
    assert json.loads(cf.schema_json())["type"] == "object"
