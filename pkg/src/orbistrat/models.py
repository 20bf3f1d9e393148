"""Model files (JSON, ``.model``) and the built-in catalog."""

from __future__ import annotations

import json
import os
from decimal import Decimal, localcontext
from importlib import resources
from pathlib import Path

import numpy as np

from orbistrat.geom import TOL, Box, EuclideanIsometry, GeometryError
from orbistrat.groups import DEFAULT_ELEMENT_CAP, GeneratedGroup, GroupError
from orbistrat.strata import ModelInvariantError, OrbifoldModel, validate_model

CATALOG = ("torus2", "pillowcase_p2", "wallpaper_p4", "hexagonal3d_d3", "kleinfour3d")
TOL_ENV = "ORBISTRAT_TOL"


class ModelParseError(ValueError):
    pass


def _sqrt3_half() -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 17
        return Decimal(3).sqrt() / 2


def _num(x) -> str:
    if isinstance(x, Decimal):
        return str(x)
    x = float(x)
    if x == 0:
        return "0"
    if x.is_integer():
        return str(int(x))
    return repr(x)


def _vec_text(v) -> str:
    return "[" + ", ".join(_num(x) for x in v) + "]"


def dumps_model(spec: dict) -> str:
    """Serialize a model dict with fixed key order and exact decimal entries."""
    lines = ["{"]
    lines.append(f'  "label": {json.dumps(spec["label"])},')
    lines.append(f'  "dimension": {spec["dimension"]},')
    lines.append('  "generators": [')
    gens = spec["generators"]
    for i, g in enumerate(gens):
        sep = "," if i + 1 < len(gens) else ""
        lines.append(f'    {{"linear": {_vec_text(g["linear"])}, "translation": {_vec_text(g["translation"])}}}{sep}')
    lines.append("  ],")
    if spec.get("lattice_basis") is not None:
        rows = ", ".join(_vec_text(r) for r in spec["lattice_basis"])
        lines.append(f'  "lattice_basis": [{rows}],')
    box = spec["fundamental_box"]
    lines.append(f'  "fundamental_box": {{"min": {_vec_text(box["min"])}, "max": {_vec_text(box["max"])}}},')
    lines.append(f'  "tolerance": {spec.get("tolerance", TOL)!r},')
    en = spec.get("enumeration", {})
    lines.append(
        f'  "enumeration": {{"max_word_length": {en.get("max_word_length", 8)}, '
        f'"element_cap": {en.get("element_cap", DEFAULT_ELEMENT_CAP)}}}'
    )
    lines.append("}")
    return "\n".join(lines) + "\n"


def _translation(n, v):
    return {"linear": [1 if i == j else 0 for i in range(n) for j in range(n)], "translation": list(v)}


def _linear(m, t=None):
    m = [list(r) for r in m]
    n = len(m)
    return {"linear": [x for r in m for x in r], "translation": list(t) if t is not None else [0] * n}


def catalog_spec(name: str) -> dict:
    """Model dict for a catalog entry (the source of the shipped ``.model`` files)."""
    half = Decimal("0.5")
    s = _sqrt3_half()
    if name == "torus2":
        gens = [_translation(2, [1, 0]), _translation(2, [0, 1])]
        return dict(label=name, dimension=2, generators=gens, lattice_basis=[[1, 0], [0, 1]],
                    fundamental_box={"min": [0, 0], "max": [1, 1]})
    if name == "pillowcase_p2":
        gens = [_translation(2, [1, 0]), _translation(2, [0, 1]), _linear([[-1, 0], [0, -1]])]
        return dict(label=name, dimension=2, generators=gens, lattice_basis=[[1, 0], [0, 1]],
                    fundamental_box={"min": [0, 0], "max": [1, 1]})
    if name == "wallpaper_p4":
        gens = [_translation(2, [1, 0]), _translation(2, [0, 1]), _linear([[0, -1], [1, 0]])]
        return dict(label=name, dimension=2, generators=gens, lattice_basis=[[1, 0], [0, 1]],
                    fundamental_box={"min": [0, 0], "max": [1, 1]})
    if name == "hexagonal3d_d3":
        basis = [[1, 0, 0], [-half, s, 0], [0, 0, 1]]
        rot = [[-half, -s, 0], [s, -half, 0], [0, 0, 1]]
        flip = [[1, 0, 0], [0, -1, 0], [0, 0, -1]]
        gens = [_translation(3, b) for b in basis] + [_linear(rot), _linear(flip)]
        return dict(label=name, dimension=3, generators=gens, lattice_basis=basis,
                    fundamental_box={"min": [-half, 0, 0], "max": [1, s, 1]})
    if name == "kleinfour3d":
        basis = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        gens = [_translation(3, b) for b in basis]
        gens += [_linear([[1, 0, 0], [0, -1, 0], [0, 0, -1]]), _linear([[-1, 0, 0], [0, 1, 0], [0, 0, -1]])]
        return dict(label=name, dimension=3, generators=gens, lattice_basis=basis,
                    fundamental_box={"min": [0, 0, 0], "max": [1, 1, 1]})
    raise KeyError(name)


def catalog_text(name: str) -> str:
    if name not in CATALOG:
        raise KeyError(name)
    return resources.files("orbistrat.catalog").joinpath(f"{name}.model").read_text(encoding="utf-8")


def _env_tolerance() -> float | None:
    raw = os.environ.get(TOL_ENV)
    if not raw:
        return None
    try:
        value = float(raw)
    except ValueError:
        raise ModelParseError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not value > 0:
        raise ModelParseError(f"{TOL_ENV} must be positive")
    return value


def _real_list(obj, length, what):
    if not isinstance(obj, list) or len(obj) != length:
        raise ModelParseError(f"{what}: expected a list of {length} numbers")
    try:
        return np.array([float(x) for x in obj])
    except (TypeError, ValueError):
        raise ModelParseError(f"{what}: entries must be numbers") from None


def parse_model(text: str, validate: bool = True) -> OrbifoldModel:
    """Build an :class:`OrbifoldModel` from model-file text.

    Raises :class:`ModelParseError` for malformed input and
    :class:`ModelInvariantError` when the data violates a model invariant.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ModelParseError("top level must be an object")
    for key in ("dimension", "generators", "fundamental_box"):
        if key not in data:
            raise ModelParseError(f"missing field {key!r}")
    n = data["dimension"]
    if not isinstance(n, int) or n < 1:
        raise ModelParseError("dimension must be a positive integer")
    if not isinstance(data["generators"], list) or not data["generators"]:
        raise ModelParseError("generators must be a non-empty list")
    tol = data.get("tolerance", TOL)
    env_tol = _env_tolerance()
    if env_tol is not None:
        tol = env_tol
    if not isinstance(tol, (int, float)) or not tol > 0:
        raise ModelParseError("tolerance must be a positive number")
    gens = []
    for i, g in enumerate(data["generators"]):
        if not isinstance(g, dict) or "linear" not in g or "translation" not in g:
            raise ModelParseError(f"generator {i}: needs 'linear' and 'translation'")
        a = _real_list(g["linear"], n * n, f"generator {i} linear").reshape(n, n)
        b = _real_list(g["translation"], n, f"generator {i} translation")
        gens.append(EuclideanIsometry(a, b))
    lattice = data.get("lattice_basis")
    if lattice is not None:
        if not isinstance(lattice, list) or len(lattice) != n:
            raise ModelParseError(f"lattice_basis: expected {n} rows")
        lattice = np.array([_real_list(r, n, "lattice_basis row") for r in lattice])
    box = data["fundamental_box"]
    if not isinstance(box, dict) or "min" not in box or "max" not in box:
        raise ModelParseError("fundamental_box needs 'min' and 'max'")
    lo = _real_list(box["min"], n, "fundamental_box min")
    hi = _real_list(box["max"], n, "fundamental_box max")
    en = data.get("enumeration", {}) or {}
    if not isinstance(en, dict):
        raise ModelParseError("enumeration must be an object")
    max_len = en.get("max_word_length", 8)
    cap = en.get("element_cap", DEFAULT_ELEMENT_CAP)
    if not isinstance(max_len, int) or not isinstance(cap, int) or max_len < 1 or cap < 1:
        raise ModelParseError("enumeration limits must be positive integers")

    for i, g in enumerate(gens):
        if g.orthogonality_defect() > max(tol, 1e-12):
            raise ModelInvariantError(
                "orthogonality", f"generator {i} linear part is not orthogonal (A^T A != I)"
            )
    try:
        group = GeneratedGroup(n, tuple(gens), lattice, max_word_length=max_len, element_cap=cap, tol=tol)
    except GroupError as exc:
        msg = str(exc)
        name = "lattice invariance" if "lattice" in msg else "group data"
        raise ModelInvariantError(name, msg) from None
    try:
        fbox = Box(lo, hi)
    except GeometryError as exc:
        raise ModelInvariantError("box", str(exc)) from None
    model = OrbifoldModel(n, group, fbox, tolerance=tol, label=str(data.get("label", "")))
    if validate:
        validate_model(model)
    return model


def load_model(path, validate: bool = True) -> OrbifoldModel:
    text = Path(path).read_text(encoding="utf-8")
    return parse_model(text, validate=validate)


def load_catalog(name: str, validate: bool = True) -> OrbifoldModel:
    return parse_model(catalog_text(name), validate=validate)
