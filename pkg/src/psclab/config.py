"""Experiment configuration: JSON schema, defaults and model builders."""

from __future__ import annotations

import ast
import copy
import json
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import jets
from .errors import ConfigError
from .jets import Fn, Jet
from .models import (
    CapParams,
    cap_metric,
    doubly_warped,
    flat_cylinder,
    round_s3_hopf_torus,
    round_sphere,
)

_FUNCS = {"sin": jets.sin, "cos": jets.cos, "exp": jets.exp, "log": jets.log, "sqrt": jets.sqrt}
_CONSTS = {"pi": np.pi, "e": np.e}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_expr = {"type": "string", "minLength": 1}
_list_num = {"type": "array", "items": _num}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["sphere", "cap", "cylinder", "doubly_warped", "s3"]},
        "radius": _pos,
        "sigma": _pos,
        "rho": _pos,
        "length": _pos,
        "n": {"type": "integer", "minimum": 3},
        "interval": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        "a": _expr,
        "b": _expr,
        "K_F": _num,
        "margin": {"type": "number", "minimum": 0},
        "name": {"type": "string"},
    },
    "additionalProperties": False,
}

FUNCTION_SCHEMA = {
    "type": "object",
    "required": ["expr"],
    "properties": {"expr": _expr, "d1": _expr, "d2": _expr},
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "psclab experiment configuration",
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "verify": {
            "type": "object",
            "properties": {
                "models": {"type": "array", "items": MODEL_SCHEMA},
                "pairs": {"type": "integer", "minimum": 1},
                "points": {"type": "integer", "minimum": 1},
                "tol": _pos,
                "tol_fd": _pos,
                "tol_delta": _pos,
                "tol_estimate": _pos,
                "tol_conformal": _pos,
                "tol_bump": _pos,
                "tol_jet": _pos,
                "ricci_free": {
                    "type": "object",
                    "properties": {"C": _list_num, "eps": {"type": "array", "items": _pos}},
                    "additionalProperties": False,
                },
                "user_pairs": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["alpha", "beta"],
                        "properties": {"alpha": FUNCTION_SCHEMA, "beta": FUNCTION_SCHEMA, "name": {"type": "string"}},
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
        "flow": {
            "type": "object",
            "properties": {
                "model": MODEL_SCHEMA,
                "eps": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "s": _list_num,
                "grid": {"type": "integer", "minimum": 3},
                "endpoints": {"enum": ["auto", "include", "exclude"]},
                "tol": _pos,
                "tol_check": _pos,
                "tol_mono": _pos,
                "blend": {
                    "type": "object",
                    "properties": {
                        "inner": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                        "eps": _pos,
                        "s_max": _pos,
                        "depth": {"type": "integer", "minimum": 1},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "figure": {
            "type": "object",
            "properties": {
                "s": _list_num,
                "eps": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "n_phi": {"type": "integer", "minimum": 3},
                "panels": {"type": "integer", "minimum": 8},
                "stride": {"type": "integer", "minimum": 1},
                "tol": _pos,
                "tol_smooth": _pos,
                "tol_circumference": _pos,
                "tol_isometry": _pos,
            },
            "additionalProperties": False,
        },
        "submersion": {
            "type": "object",
            "properties": {
                "berger_tau": _list_num,
                "tau_grid": {"type": "integer", "minimum": 2},
                "collar_tau": _list_num,
                "caps": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["sigma", "rho"],
                        "properties": {"sigma": _num, "rho": _num},
                        "additionalProperties": False,
                    },
                },
                "cap_s": _list_num,
                "H_targets": _list_num,
                "bundle_curvature": _num,
                "tol": _pos,
                "tol_berger": _pos,
                "tol_cap": _pos,
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

DEFAULTS: dict[str, Any] = {
    "seed": 20240917,
    "verify": {
        "models": [
            {"type": "sphere", "radius": 1.0, "margin": 0.05},
            {"type": "doubly_warped", "n": 3, "interval": [0.2, 1.2], "a": "2+sin(t)", "b": "1+0.25*t**2",
             "K_F": 0.0, "margin": 0.05, "name": "warped-sin"},
            {"type": "s3", "margin": 0.05},
        ],
        "pairs": 50,
        "points": 100,
        "tol": 1e-7,
        "tol_fd": 1e-4,
        "tol_delta": 1e-8,
        "tol_estimate": 1e-10,
        "tol_conformal": 1e-6,
        "tol_bump": 1e-8,
        "tol_jet": 1e-9,
        "ricci_free": {"C": [0.0, 0.5], "eps": [0.5, 1.0, 2.0]},
        "user_pairs": [],
    },
    "flow": {
        "model": {"type": "sphere", "radius": 1.0},
        "eps": [0.0, 1.0],
        "s": [round(0.1 * k, 10) for k in range(16)],
        "grid": 400,
        "endpoints": "auto",
        "tol": 1e-10,
        "tol_check": 1e-9,
        "tol_mono": 1e-6,
        "blend": {"inner": [0.6, 1.0], "eps": 1.0, "s_max": 1.5, "depth": 20},
    },
    "figure": {
        "s": [0.0, 0.5, 1.0, 1.5],
        "eps": [0.0, 1.0],
        "n_phi": 64,
        "panels": 2000,
        "stride": 10,
        "tol": 1e-6,
        "tol_smooth": 1e-3,
        "tol_circumference": 1e-3,
        "tol_isometry": 1e-6,
    },
    "submersion": {
        "berger_tau": [0.25, 0.5, 1.0, 2.0],
        "tau_grid": 20,
        "collar_tau": [1.0, 0.5, 0.25, float(np.exp(-1.0))],
        "caps": [{"sigma": 1.0, "rho": float(np.pi / 4)}, {"sigma": 2.0, "rho": 1.0}],
        "cap_s": [0.0, 0.5, 1.0, 2.0],
        "H_targets": [1.5, 2.0, 4.0, 8.0],
        "bundle_curvature": 1.0,
        "tol": 1e-8,
        "tol_berger": 1e-6,
        "tol_cap": 1e-9,
    },
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {loc}: {exc.message}") from None


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults merged with the JSON file at ``path`` (validated before and after)."""
    user: dict = {}
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config root must be an object")
        validate(user)
    cfg = _merge(DEFAULTS, user)
    if overrides:
        cfg = _merge(cfg, overrides)
    validate(cfg)
    return cfg


def schema_json() -> str:
    return json.dumps(SCHEMA, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Expressions


def _check_expr(tree: ast.AST, src: str) -> None:
    allowed = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Load, ast.Call,
               ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)
    for node in ast.walk(tree):
        if not isinstance(node, allowed):
            raise ConfigError(f"unsupported syntax {type(node).__name__} in {src!r}")
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS and node.id != "t":
            raise ConfigError(f"unknown name {node.id!r} in {src!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords or len(node.args) != 1:
                raise ConfigError(f"only sin, cos, exp, log, sqrt of one argument allowed in {src!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ConfigError(f"non-numeric constant in {src!r}")


def _compile(src: str):
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse {src!r}: {exc.msg}") from None
    _check_expr(tree, src)
    code = compile(tree, "<expr>", "eval")
    env = {"__builtins__": {}, **_FUNCS, **_CONSTS}

    def rule(t):
        out = eval(code, env, {"t": t})  # noqa: S307 - names and syntax whitelisted above
        if isinstance(out, Jet) or isinstance(t, Jet):
            return out
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(t)).astype(float)

    return rule


def expression_fn(expr: str, d1: str | None = None, d2: str | None = None) -> Fn:
    """Function of ``t`` from an expression; exact derivatives via jets.

    ``d1``/``d2`` override the first two derivatives (anything supplied is
    trusted as is, which is how a wrong derivative reaches a check).
    """
    rule = _compile(expr)
    if d1 is None and d2 is None:
        return Fn(rule, expr)
    r1 = _compile(d1) if d1 is not None else None
    r2 = _compile(d2) if d2 is not None else None

    def overridden(t):
        if not isinstance(t, Jet):
            return rule(t)
        x = t.d[0]
        base = Fn(rule).derivs(x, 3)
        v1 = Fn(r1).derivs(x, 2) if r1 is not None else base[1:]
        v2 = Fn(r2)(x) if r2 is not None else v1[1]
        v3 = Fn(r2).derivs(x, 1)[1] if r2 is not None else (v1[2] if r1 is not None else base[3])
        return jets._compose(t, (base[0], v1[0], v2, v3))

    return Fn(overridden, expr)


def function_from_config(spec: dict) -> Fn:
    return expression_fn(spec["expr"], spec.get("d1"), spec.get("d2"))


def build_model(spec: dict):
    kind = spec["type"]
    if kind == "sphere":
        return round_sphere(spec.get("radius", 1.0))
    if kind == "cap":
        return cap_metric(CapParams(spec["sigma"], spec["rho"]))
    if kind == "cylinder":
        return flat_cylinder(spec.get("length", 1.0))
    if kind == "s3":
        return round_s3_hopf_torus()
    if kind == "doubly_warped":
        for key in ("n", "interval", "a", "b"):
            if key not in spec:
                raise ConfigError(f"doubly_warped model needs {key!r}")
        return doubly_warped(
            spec["n"], spec["interval"], expression_fn(spec["a"]), expression_fn(spec["b"]),
            spec.get("K_F", 0.0), spec.get("name", "doubly-warped"),
        )
    raise ConfigError(f"unknown model type {kind!r}")


def model_range(model, margin: float) -> tuple[float, float]:
    if hasattr(model, "L"):
        return margin, model.L - margin
    lo, hi = model.interval
    return lo + margin, hi - margin
