"""JSON input documents: schemas, fixture lookup and ``--set`` overrides.

Every document carries ``schema_version`` and unknown keys are rejected.
A string value ``"fixture:NAME"`` in place of a material loads the material
from the bundled fixture ``NAME.json``.
"""

from __future__ import annotations

import copy
import json
from importlib import resources

import jsonschema
import numpy as np

from flywheel.model import AnnulusGeometry, LoadCase, Material, ValidationError, make_material, rpm_to_rad_s

SCHEMA_VERSION = 1
FIXTURE_PREFIX = "fixture:"


class ConfigError(ValidationError):
    pass


def _obj(properties, required=()):
    return {
        "type": "object",
        "properties": properties,
        "required": list(required),
        "additionalProperties": False,
    }


NUM = {"type": "number"}
INT = {"type": "integer"}
BOOL = {"type": "boolean"}
STR = {"type": "string"}
PAIR = {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}
NUM_LIST = {"type": "array", "items": NUM}

MATERIAL_FIELDS = {
    "name": STR,
    "density": NUM,
    "poisson_ratio": NUM,
    "elastic_modulus": NUM,
    "yield_strength": NUM,
    "tensile_strength": NUM,
    "cost_per_kg": NUM,
}
MATERIAL_REQUIRED = ("name", "density", "poisson_ratio", "elastic_modulus", "yield_strength")
MATERIAL = {
    "oneOf": [
        {"type": "string", "pattern": "^fixture:"},
        _obj(MATERIAL_FIELDS, MATERIAL_REQUIRED),
    ]
}
GEOMETRY = _obj({"inner_radius": NUM, "outer_radius": NUM, "height": NUM}, ("inner_radius", "outer_radius"))
LOAD = _obj({"angular_speed": NUM, "rpm": NUM, "inner_pressure": NUM, "outer_pressure": NUM})
AXIS = {"oneOf": [NUM_LIST, _obj({"start": NUM, "stop": NUM, "num": INT}, ("start", "stop", "num"))]}
VERSION = {"const": SCHEMA_VERSION}

SCHEMAS = {
    "material": _obj({"schema_version": VERSION, "material": MATERIAL}, ("schema_version", "material")),
    "analyze": _obj(
        {
            "schema_version": VERSION,
            "material": MATERIAL,
            "geometry": GEOMETRY,
            "load": LOAD,
            "n_samples": INT,
            "safety_factor": NUM,
            "linear_fit": _obj(
                {
                    "omega_points": INT,
                    "shrink_points": INT,
                    "max_shrink": NUM,
                    "criterion": {"enum": ["exact", "bound"]},
                }
            ),
        },
        ("schema_version", "material", "geometry", "load"),
    ),
    "contour": _obj(
        {"schema_version": VERSION, "kind": STR, "poisson_ratio": NUM, "t_axis": AXIS, "r_axis": AXIS},
        ("schema_version", "kind"),
    ),
    "energy": _obj(
        {
            "schema_version": VERSION,
            "material": MATERIAL,
            "design": _obj(
                {"topology": {"enum": ["shaftless", "type1", "type2"]}, "geometry": GEOMETRY, "shrink_stress": NUM},
                ("topology", "geometry"),
            ),
            "rotor": _obj(
                {"mass": NUM, "moment_of_inertia": NUM, "angular_speed": NUM, "rpm": NUM, "outer_radius": NUM},
                ("mass", "moment_of_inertia", "outer_radius"),
            ),
            "operating_fraction": NUM,
            "envelope_volume": NUM,
            "safety_factor": NUM,
        },
        ("schema_version",),
    ),
    "compare": _obj(
        {
            "schema_version": VERSION,
            "materials": {
                "type": "array",
                "minItems": 1,
                "items": _obj(
                    dict(
                        MATERIAL_FIELDS,
                        max_specific_energy=NUM,
                        shape_factor=NUM,
                        reference_energy_per_dollar=NUM,
                    ),
                    MATERIAL_REQUIRED,
                ),
            },
            "lift_ratios": _obj(
                {"poisson_ratio": NUM, "t_values": NUM_LIST, "delta_sigmas": NUM_LIST}, ("t_values",)
            ),
        },
        ("schema_version", "materials"),
    ),
    "assembly": _obj(
        {
            "schema_version": VERSION,
            "rings": {
                "type": "array",
                "minItems": 1,
                "items": _obj(
                    {
                        "material": MATERIAL,
                        "inner_radius": NUM,
                        "outer_radius": NUM,
                        "interference": NUM,
                        "height": NUM,
                    },
                    ("material", "inner_radius", "outer_radius"),
                ),
            },
            "angular_speed": NUM,
            "rpm": NUM,
            "mode": {"enum": ["superposition", "full_compatibility"]},
            "criterion": {"enum": ["exact_combined", "lemma_bound"]},
            "safety_factor": NUM,
            "n_samples": INT,
        },
        ("schema_version", "rings"),
    ),
    "optimize": _obj(
        {
            "schema_version": VERSION,
            "study": {"const": "optimize"},
            "material": MATERIAL,
            "ring_material": MATERIAL,
            "topology": STR,
            "objective": STR,
            "variables": {"type": "object", "additionalProperties": PAIR, "minProperties": 1},
            "fixed": {"type": "object", "additionalProperties": NUM},
            "equalities": {
                "type": "array",
                "items": _obj(
                    {"coefficients": {"type": "object", "additionalProperties": NUM}, "rhs": NUM},
                    ("coefficients", "rhs"),
                ),
            },
            "criterion": STR,
            "safety_factor": NUM,
            "assembly_mode": STR,
            "seed": INT,
            "starts": INT,
            "max_evaluations": INT,
            "step_tolerance": NUM,
            "snap": BOOL,
            "length_grid": NUM,
            "speed_grid_rpm": NUM,
            "workers": INT,
            "sweep": {"type": "object", "additionalProperties": AXIS, "minProperties": 1},
        },
        ("schema_version", "material", "variables"),
    ),
    "preload": _obj(
        {
            "schema_version": VERSION,
            "study": {"const": "preload"},
            "material": MATERIAL,
            "ring_material": MATERIAL,
            "outer_radius": NUM,
            "inner_radius": NUM,
            "height": NUM,
            "split_bounds": PAIR,
            "interference_bounds": PAIR,
            "assembly_mode": {"enum": ["superposition", "full_compatibility"]},
            "criterion": {"enum": ["exact_combined", "lemma_bound"]},
            "safety_factor": NUM,
            "seed": INT,
            "starts": INT,
            "workers": INT,
        },
        ("schema_version", "study", "material", "outer_radius"),
    ),
    "verify": _obj({"schema_version": VERSION, "cases": INT, "seed": INT}, ("schema_version",)),
}
SCHEMAS["report"] = SCHEMAS["energy"]


def fixture_names():
    return sorted(p.name[:-5] for p in resources.files("flywheel.fixtures").iterdir() if p.name.endswith(".json"))


def fixture_text(name: str) -> str:
    path = resources.files("flywheel.fixtures").joinpath(f"{name}.json")
    if not path.is_file():
        raise ConfigError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    return path.read_text(encoding="utf-8")


def read_input(spec: str) -> bytes:
    """Raw bytes of a path or a ``fixture:NAME`` reference."""
    if spec.startswith(FIXTURE_PREFIX):
        return fixture_text(spec[len(FIXTURE_PREFIX):]).encode("utf-8")
    try:
        with open(spec, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read input {spec!r}: {exc.strerror}") from None


def parse_document(raw: bytes) -> dict:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"input is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("input must be a JSON object")
    return doc


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``key.sub=value`` assignments; values are parsed as JSON when possible."""
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        parts = key.split(".")
        node = doc
        for part in parts[:-1]:
            if isinstance(node, list):
                try:
                    node = node[int(part)]
                except (ValueError, IndexError):
                    raise ConfigError(f"override path {key!r}: bad list index {part!r}") from None
            else:
                node = node.setdefault(part, {})
            if not isinstance(node, (dict, list)):
                raise ConfigError(f"override path {key!r} descends into a scalar")
        last = parts[-1]
        if isinstance(node, list):
            try:
                node[int(last)] = _parse_value(value)
            except (ValueError, IndexError):
                raise ConfigError(f"override path {key!r}: bad list index {last!r}") from None
        else:
            node[last] = _parse_value(value)
    return doc


def validate(doc: dict, kind: str) -> dict:
    if "schema_version" not in doc:
        raise ConfigError("missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {doc['schema_version']!r}; expected {SCHEMA_VERSION}")
    validator = jsonschema.Draft7Validator(SCHEMAS[kind])
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{kind} config invalid at {where}: {err.message}")
    return doc


def build_material(value) -> Material:
    if isinstance(value, str):
        name = value[len(FIXTURE_PREFIX):]
        doc = validate(parse_document(fixture_text(name).encode("utf-8")), "material")
        value = doc["material"]
    return make_material(**value)


def build_geometry(value: dict) -> AnnulusGeometry:
    return AnnulusGeometry(value["inner_radius"], value["outer_radius"], value.get("height", 1.0))


def speed_from(value: dict, default: float = 0.0) -> float:
    if "angular_speed" in value and "rpm" in value:
        raise ConfigError("give either angular_speed or rpm, not both")
    if "rpm" in value:
        return rpm_to_rad_s(value["rpm"])
    return float(value.get("angular_speed", default))


def build_load(value: dict) -> LoadCase:
    return LoadCase(speed_from(value), value.get("inner_pressure", 0.0), value.get("outer_pressure", 0.0))


def build_axis(value):
    if value is None:
        return None
    if isinstance(value, dict):
        if value["num"] < 1:
            raise ConfigError("axis num must be >= 1")
        return np.linspace(value["start"], value["stop"], value["num"])
    return np.asarray(value, dtype=float)
