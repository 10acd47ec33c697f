"""Serialization: canonical JSON, model documents, designs, CSV export.

All floating-point values are written with 17 significant digits, which
round-trips float64 exactly and keeps repeated runs byte-identical.
Canonical JSON sorts object keys and uses fixed separators.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .designs import Design
from .errors import ConfigError
from .families import linked_response
from .model import ExperimentalRegion, GridPoint, ModelSpec, ParameterBox, SpecReport

__all__ = [
    "format_float",
    "dump_json",
    "parse_model_document",
    "validate_model_document",
    "load_model_spec",
    "model_to_document",
    "design_to_document",
    "design_from_document",
]


def format_float(x: float) -> str:
    """17-significant-digit decimal form; exact float64 round-trip."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite float {x!r} cannot be serialized")
    return format(x, ".17g")


def _write(obj: Any, out: list[str], allow_nonfinite_null: bool) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            if allow_nonfinite_null:
                out.append("null")
            else:
                raise ValueError(f"non-finite float {x!r} cannot be serialized")
        else:
            out.append(format(x, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for key in sorted(obj):
            if not isinstance(key, str):
                raise ValueError(f"JSON object keys must be strings, got {key!r}")
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _write(obj[key], out, allow_nonfinite_null)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, out, allow_nonfinite_null)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _write(obj.tolist(), out, allow_nonfinite_null)
    else:
        raise ValueError(f"cannot serialize {type(obj).__name__}")


def dump_json(obj: Any, allow_nonfinite_null: bool = False) -> str:
    """Canonical JSON text: sorted keys, compact, 17-digit floats."""
    out: list[str] = []
    _write(obj, out, allow_nonfinite_null)
    return "".join(out)


# ----------------------------------------------------------------------
# model documents
# ----------------------------------------------------------------------

def _require(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise ConfigError(f"{path}: missing required field {key!r}")
    val = doc[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{path}.{key}: expected a number, got {type(val).__name__}")
        return float(val)
    if not isinstance(val, kind):
        raise ConfigError(
            f"{path}.{key}: expected {kind.__name__}, got {type(val).__name__}"
        )
    return val


def _float_list(val, path: str) -> list[float]:
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{path}: expected a non-empty list of numbers")
    out = []
    for i, v in enumerate(val):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}[{i}]: expected a number, got {type(v).__name__}")
        out.append(float(v))
    return out


def parse_model_document(doc: dict, path: str = "model") -> ModelSpec:
    """Build a ModelSpec from its JSON document form.

    Raises ConfigError naming the offending field, or SpecError for
    semantic violations (rank, duplicate labels, box ordering).
    """
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object")
    name = _require(doc, "family_link", str, path)
    response = linked_response(name)
    grid = _require(doc, "grid", list, path)
    if not grid:
        raise ConfigError(f"{path}.grid: must not be empty")
    points = []
    for i, entry in enumerate(grid):
        epath = f"{path}.grid[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{epath}: expected an object")
        label = _require(entry, "label", str, epath)
        x = _float_list(_require(entry, "x", list, epath), f"{epath}.x")
        f = _float_list(_require(entry, "f", list, epath), f"{epath}.f")
        points.append(GridPoint(label=label, x=tuple(x), f=tuple(f)))
    boxdoc = _require(doc, "theta_box", dict, path)
    lower = _float_list(_require(boxdoc, "lower", list, f"{path}.theta_box"), f"{path}.theta_box.lower")
    upper = _float_list(_require(boxdoc, "upper", list, f"{path}.theta_box"), f"{path}.theta_box.upper")
    region = ExperimentalRegion(points)
    box = ParameterBox(lower, upper)
    return ModelSpec(region, response, box)


def validate_model_document(doc: dict) -> SpecReport:
    """Report-style validation of a model document; never raises."""
    try:
        parse_model_document(doc)
    except (ConfigError, Exception) as exc:  # all violations become report lines
        return SpecReport(problems=(str(exc),))
    return SpecReport()


def model_to_document(spec: ModelSpec) -> dict:
    return {
        "family_link": spec.response.name,
        "grid": [
            {"label": pt.label, "x": list(pt.x), "f": list(pt.f)}
            for pt in spec.region.points
        ],
        "theta_box": {
            "lower": spec.box.lower.tolist(),
            "upper": spec.box.upper.tolist(),
        },
    }


def load_model_spec(path: str | Path) -> ModelSpec:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return parse_model_document(doc, path=str(path))


# ----------------------------------------------------------------------
# designs
# ----------------------------------------------------------------------

def design_to_document(design: Design, spec: ModelSpec) -> list[dict]:
    """Support as a list of {label, weight}, weights at full precision."""
    labels = spec.region.labels
    return [
        {"label": labels[k], "weight": w}
        for k, w in zip(design.support, design.weights)
    ]


def design_from_document(doc: list, spec: ModelSpec) -> Design:
    if not isinstance(doc, list) or not doc:
        raise ConfigError("design document: expected a non-empty list")
    pairs = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise ConfigError(f"design[{i}]: expected an object")
        label = _require(entry, "label", str, f"design[{i}]")
        weight = _require(entry, "weight", float, f"design[{i}]")
        pairs.append((spec.region.index_of(label), weight))
    return Design(
        support=tuple(k for k, _ in pairs),
        weights=tuple(w for _, w in pairs),
    )
