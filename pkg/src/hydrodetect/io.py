"""File formats: JSON schemas, loaders, CSV writers and run manifests.

Complex numbers are ``[re, im]`` pairs; floats are written with ``repr`` (the
shortest decimal that round-trips), so re-reading gives bit-identical values.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema

from .rigid import Configuration, Position
from .shape import ShapeSpec, make_arc, make_c147, make_disk, make_ellipse, make_segment
from .spectral import MomentTable

__all__ = [
    "SCHEMAS",
    "validate",
    "load_json",
    "load_shape",
    "load_config",
    "load_position",
    "load_tables",
    "load_timeseries",
    "dumps",
    "write_json",
    "write_csv",
    "write_manifest",
    "sha256_file",
]

_num = {"type": "number"}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

_shape_coeffs = {
    "type": "object",
    "properties": {
        "kind": {"const": "coefficients"},
        "c1": _pair,
        "tail": {"type": "array", "items": _pair},
    },
    "required": ["c1"],
    "additionalProperties": False,
}


def _kind(name, props):
    return {
        "type": "object",
        "properties": {"kind": {"const": name}, **props},
        "required": ["kind", *props],
        "additionalProperties": False,
    }


SCHEMAS = {
    "shape": {
        "oneOf": [
            _shape_coeffs,
            _kind("disk", {"radius": {"type": "number", "exclusiveMinimum": 0}}),
            _kind("ellipse", {"a": _num, "b": _num}),
            _kind("arc", {"h": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}),
            _kind("segment", {"R": {"type": "number", "exclusiveMinimum": 0}, "theta": _num}),
            _kind("c147", {"c1": _pair, "cm4": _pair, "cm7": _pair}),
        ]
    },
    "config": {
        "type": "object",
        "properties": {"alpha": _num, "r": _pair, "omega": _num, "w0": _pair},
        "required": ["alpha", "r", "omega", "w0"],
        "additionalProperties": False,
    },
    "position": {
        "type": "object",
        "properties": {"alpha": _num, "r": _pair},
        "required": ["alpha", "r"],
        "additionalProperties": False,
    },
    "table": {
        "type": "object",
        "properties": {
            "t": _num,
            "nu": _pair,
            "lambdas": {"type": "array", "items": _pair, "minItems": 1},
        },
        "required": ["nu", "lambdas"],
        "additionalProperties": False,
    },
}
SCHEMAS["measurement"] = {
    "oneOf": [
        SCHEMAS["table"],
        {
            "type": "object",
            "properties": {"tables": {"type": "array", "items": SCHEMAS["table"], "minItems": 1}},
            "required": ["tables"],
            "additionalProperties": False,
        },
    ]
}
SCHEMAS["timeseries_row"] = {**SCHEMAS["table"], "required": ["t", "nu", "lambdas"]}


def validate(obj, schema_name: str) -> None:
    """Raise :class:`jsonschema.ValidationError` if ``obj`` does not match."""
    jsonschema.validate(obj, SCHEMAS[schema_name])
    # JSON has no NaN, but Python's parser accepts it; reject non-finite numbers
    _check_finite(obj, schema_name)


def _check_finite(obj, where):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise jsonschema.ValidationError(f"non-finite number in {where}")
    if isinstance(obj, dict):
        for v in obj.values():
            _check_finite(v, where)
    elif isinstance(obj, list):
        for v in obj:
            _check_finite(v, where)


def load_json(path) -> object:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def shape_from_obj(obj: dict) -> ShapeSpec:
    validate(obj, "shape")
    kind = obj.get("kind", "coefficients")
    if kind == "coefficients":
        return ShapeSpec.from_json(obj)
    if kind == "disk":
        return make_disk(obj["radius"])
    if kind == "ellipse":
        return make_ellipse(obj["a"], obj["b"])
    if kind == "arc":
        return make_arc(obj["h"])
    if kind == "segment":
        return make_segment(obj["R"], obj["theta"])
    return make_c147(complex(*obj["c1"]), complex(*obj["cm4"]), complex(*obj["cm7"]))


def load_shape(path) -> ShapeSpec:
    return shape_from_obj(load_json(path))


def load_config(path) -> Configuration:
    obj = load_json(path)
    validate(obj, "config")
    return Configuration.from_json(obj)


def load_position(path) -> Position:
    obj = load_json(path)
    validate(obj, "position")
    return Position(obj["alpha"], complex(*obj["r"]))


def load_tables(path) -> list[MomentTable]:
    obj = load_json(path)
    validate(obj, "measurement")
    rows = obj["tables"] if "tables" in obj else [obj]
    return [MomentTable.from_json({"nu": r["nu"], "lambdas": r["lambdas"]}) for r in rows]


def load_timeseries(path):
    """JSON lines, one moment table with a ``t`` field per line."""
    from .track import TimeSeriesMeasurement

    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise jsonschema.ValidationError(f"line {lineno}: {exc}") from None
            validate(row, "timeseries_row")
            rows.append(row)
    return TimeSeriesMeasurement.from_jsonl(rows)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(float(v) + 0.0)  # plain float repr, no signed zeros
    if isinstance(v, int):
        return str(int(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(outputs: Sequence, subcommand: str, inputs: Sequence, params: dict) -> list[Path]:
    """Write ``<output>.manifest.json`` next to every output file."""
    from . import __version__

    record = {
        "tool": "hydrodetect",
        "version": __version__,
        "subcommand": subcommand,
        "inputs": [{"path": str(p), "sha256": sha256_file(p)} for p in inputs],
        "parameters": params,
        "outputs": [{"path": str(p), "sha256": sha256_file(p)} for p in outputs],
    }
    written = []
    for p in outputs:
        side = Path(str(p) + ".manifest.json")
        side.write_text(dumps(record), encoding="utf-8")
        written.append(side)
    return written
