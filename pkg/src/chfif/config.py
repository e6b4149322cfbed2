"""JSON (de)serialisation of parameter sets, systems, bases and metadata.

Irrational constants are stored as small arithmetic expressions such as
``"sqrt(7)-3"`` and evaluated on load, so presets reload bit-for-bit.
"""
from __future__ import annotations

import ast
import hashlib
import json
import math
import operator

import numpy as np

from . import __version__
from .ifs_core import DataPoints, HiddenParams, Knots, build_system

__all__ = [
    "PRESETS",
    "evaluate_expr",
    "params_from_dict",
    "params_to_dict",
    "preset_params",
    "system_from_dict",
    "config_hash",
    "metadata",
    "dumps",
    "basis_to_dict",
    "basis_from_dict",
]

PRESETS = {
    "paper-sec4": {
        "alpha": ["0", "sqrt(7)-3"],
        "beta": ["1/20", "(3-sqrt(7))/20"],
        "gamma": ["-9/10", "(-67+29*sqrt(7))/10"],
    }
}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sqrt": math.sqrt}


def evaluate_expr(expr) -> float:
    """Evaluate a number or an arithmetic expression with ``sqrt``."""
    if isinstance(expr, (int, float)):
        return float(expr)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression: {expr!r}")

    return ev(ast.parse(str(expr).replace("sqrt7", "sqrt(7)"), mode="eval"))


def preset_params(name: str) -> HiddenParams:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return params_from_dict(PRESETS[name])


def params_from_dict(d: dict) -> HiddenParams:
    if "preset" in d:
        return preset_params(d["preset"])
    return HiddenParams(*([evaluate_expr(v) for v in d[k]] for k in ("alpha", "beta", "gamma")))


def params_to_dict(p: HiddenParams, preset: str | None = None) -> dict:
    if preset is not None:
        return {"preset": preset, **PRESETS[preset]}
    return {k: [float(v) for v in getattr(p, k)] for k in ("alpha", "beta", "gamma")}


def system_from_dict(d: dict):
    """System from ``{"knots", "alpha", "beta", "gamma", "y", "z"}``; ``z`` defaults to zeros."""
    knots = Knots([evaluate_expr(v) for v in d["knots"]])
    N = knots.N
    params = params_from_dict(d) if ("alpha" in d or "preset" in d) else HiddenParams.zeros(N)
    y = [evaluate_expr(v) for v in d["y"]]
    z = [evaluate_expr(v) for v in d.get("z", [0.0] * (N + 1))]
    return build_system(knots, params, DataPoints(y, z))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def config_hash(config: dict) -> str:
    blob = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def metadata(config: dict) -> dict:
    return {"version": __version__, "config_hash": config_hash(config), "config": _plain(config)}


def dumps(payload: dict) -> str:
    return json.dumps(_plain(payload), indent=2, sort_keys=True)


def basis_to_dict(basis, preset: str | None = None) -> dict:
    """Parameters, knots, template data and Gram-Schmidt weights of a basis."""
    return {
        "N": basis.N,
        "knots": list(np.linspace(0.0, 1.0, basis.N + 1)),
        "params": params_to_dict(basis.params, preset),
        "r": basis.r,
        "s": basis.s,
        "u": basis.u,
        "sources": list(basis.sources),
        "gs_coeffs": basis.gs_coeffs,
    }


def basis_from_dict(d: dict, rtol: float = 1e-9):
    """Rebuild a basis and check it against the stored Gram-Schmidt weights."""
    from .mra_basis import build_basis

    params = params_from_dict(d["params"])
    if params.N != int(d["N"]):
        raise ValueError("N does not match the parameter count")
    basis = build_basis(params, u=np.asarray(d["u"], float) if "u" in d else None)
    stored = np.asarray(d.get("gs_coeffs", basis.gs_coeffs), float)
    if stored.shape != basis.gs_coeffs.shape or not np.allclose(stored, basis.gs_coeffs, rtol=rtol, atol=rtol):
        raise ValueError("stored Gram-Schmidt weights do not match the rebuilt basis")
    return basis
