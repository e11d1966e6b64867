"""Analysis configuration and report serialisation.

Configs and machine reports are JSON documents.  Complex numbers are written
as ``[re, im]`` pairs and reals with 17 significant digits.  Keys are sorted,
so a report is byte-identical for a fixed config and version.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from hardyctl.errors import InputError

CONFIG_VERSION = 1
TASKS = ("exact", "null", "perturb", "interpolate", "admissibility")

_complex = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_complex_list = {"type": "array", "items": _complex}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["task", "system"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "task": {"enum": list(TASKS)},
        "system": {
            "type": "object",
            "oneOf": [
                {
                    "required": ["generator", "n"],
                    "properties": {"generator": {"enum": ["heat", "wave"]}, "n": {"type": "integer", "minimum": 2}},
                    "additionalProperties": False,
                },
                {
                    "required": ["eigenvalues", "control"],
                    "properties": {"eigenvalues": _complex_list, "control": _complex_list},
                    "additionalProperties": False,
                },
                {
                    "required": ["blocks"],
                    "properties": {
                        "blocks": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "required": ["eigenvalue", "coefficients"],
                                "properties": {"eigenvalue": _complex, "coefficients": _complex_list},
                                "additionalProperties": False,
                            },
                        }
                    },
                    "additionalProperties": False,
                },
            ],
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tau": {"type": "number", "exclusiveMinimum": 0},
                "perturbed": _complex_list,
                "perturbation": {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {"kind": {"enum": ["heat-sqrt", "shift"]}, "scale": {"type": "number"}},
                    "additionalProperties": False,
                },
                "eta": {"type": "number", "minimum": 0},
                "sweep_tol": {"type": "number", "exclusiveMinimum": 0},
                "interpolation": {
                    "type": "object",
                    "required": ["nodes", "multiplicities"],
                    "additionalProperties": False,
                    "properties": {
                        "nodes": _complex_list,
                        "multiplicities": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                        "weights": {
                            "oneOf": [
                                {"const": "standard"},
                                {"type": "array", "items": {"type": "array", "items": _complex_list}},
                            ]
                        },
                        "targets": {"type": "array", "items": _complex_list},
                        "certify": {"type": "boolean"},
                    },
                },
                "observation": {"type": "array", "items": _complex_list},
                "delta": {
                    "oneOf": [_complex_list, {"type": "array", "items": _complex_list}],
                },
                "w": {"type": "number"},
                "w0": {"type": "number"},
                "grid": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "re_min": {"type": "number", "exclusiveMinimum": 0},
                        "re_max": {"type": "number", "exclusiveMinimum": 0},
                        "per_decade": {"type": "integer", "minimum": 1},
                        "n_imag": {"type": "integer", "minimum": 1},
                        "im_factor": {"type": "number", "exclusiveMinimum": 0},
                        "max_spectral": {"type": "integer", "minimum": 0},
                    },
                },
                "series": {"type": "array", "items": {"type": "string"}},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"report": {"type": "string"}, "plot": {"type": "string"}},
        },
    },
}


def parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def parse_complex_list(vs) -> np.ndarray:
    return np.array([parse_complex(v) for v in vs], dtype=complex)


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


@dataclass
class AnalysisConfig:
    task: str
    system: dict
    params: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    version: int = CONFIG_VERSION

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisConfig":
        validate(data)
        return cls(
            task=data["task"],
            system=copy.deepcopy(data["system"]),
            params=copy.deepcopy(data.get("params", {})),
            output=copy.deepcopy(data.get("output", {})),
            version=data.get("version", CONFIG_VERSION),
        )

    def to_dict(self) -> dict:
        out = {"version": self.version, "task": self.task, "system": self.system}
        if self.params:
            out["params"] = self.params
        if self.output:
            out["output"] = self.output
        return copy.deepcopy(out)


def validate(data) -> None:
    """Schema check plus semantic checks; raises InputError with a JSON pointer."""
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        # oneOf errors are reported at the branch level; dig out the most specific
        best = jsonschema.exceptions.best_match([exc])
        raise InputError(f"{_pointer(best.absolute_path)}: {best.message}") from None
    system = data["system"]
    if "control" in system:
        if len(system["control"]) != len(system["eigenvalues"]):
            raise InputError("/system/control: length differs from /system/eigenvalues")
        for i, b in enumerate(system["control"]):
            if parse_complex(b) == 0:
                raise InputError(f"/system/control/{i}: control coefficient is zero")
        for i, lam in enumerate(system["eigenvalues"]):
            if not parse_complex(lam).real < 0:
                raise InputError(f"/system/eigenvalues/{i}: eigenvalue must have negative real part")
    if "blocks" in system:
        for i, blk in enumerate(system["blocks"]):
            if not blk["coefficients"]:
                raise InputError(f"/system/blocks/{i}/coefficients: empty block")
            if parse_complex(blk["coefficients"][-1]) == 0:
                raise InputError(f"/system/blocks/{i}/coefficients: last coefficient is zero")
    params = data.get("params", {})
    task = data["task"]
    if task == "null" and "tau" not in params:
        raise InputError("/params/tau: required for the null task")
    if task == "perturb" and not ("perturbed" in params or "perturbation" in params):
        raise InputError("/params/perturbed: required for the perturb task")
    if task == "interpolate" and "interpolation" not in params:
        raise InputError("/params/interpolation: required for the interpolate task")


def load_config(path) -> AnalysisConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from None
    return AnalysisConfig.from_dict(data)


def serialize_config(config: AnalysisConfig) -> str:
    return dumps(config.to_dict())


def parse_config(text: str) -> AnalysisConfig:
    return AnalysisConfig.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# report encoding


def to_jsonable(obj):
    """Convert numpy/complex values into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def _encode(obj, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        text = f"{obj:.17g}"
        # keep floats recognisable as floats after parsing
        return text if any(c in text for c in ".en") else text + ".0"
    return json.dumps(obj)


def dumps(obj) -> str:
    """Deterministic JSON text: sorted keys, 17-digit reals, trailing newline."""
    return _encode(to_jsonable(obj), 0) + "\n"
