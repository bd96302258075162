"""Run configuration: JSON schema validation and deterministic serialization.

Configs are validated against the schemas shipped in `anisphere/schemas/`
before any computation; unknown keys are rejected.  JSON reports are written
atomically with floats at 17 significant digits so identical configs produce
byte-identical outputs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field as dc_field
from importlib import resources

from .errors import ValidationError

_SCHEMA_CACHE = {}


def load_schema(name):
    if name not in _SCHEMA_CACHE:
        text = resources.files("anisphere.schemas").joinpath(f"{name}.json").read_text()
        _SCHEMA_CACHE[name] = json.loads(text)
    return _SCHEMA_CACHE[name]


def _check(instance, schema, path):
    t = schema.get("type")
    if t == "object":
        if not isinstance(instance, dict):
            raise ValidationError(f"{path}: expected object, got {type(instance).__name__}")
        props = schema.get("properties", {})
        if not schema.get("additionalProperties", False):
            unknown = set(instance) - set(props)
            if unknown:
                raise ValidationError(f"{path}: unknown keys {sorted(unknown)}")
        for key in schema.get("required", []):
            if key not in instance:
                raise ValidationError(f"{path}: missing required key {key!r}")
        for key, sub in props.items():
            if key in instance:
                _check(instance[key], sub, f"{path}.{key}")
    elif t == "array":
        if not isinstance(instance, list):
            raise ValidationError(f"{path}: expected array")
        if "items" in schema:
            for i, item in enumerate(instance):
                _check(item, schema["items"], f"{path}[{i}]")
        if "minItems" in schema and len(instance) < schema["minItems"]:
            raise ValidationError(f"{path}: needs at least {schema['minItems']} items")
        if "maxItems" in schema and len(instance) > schema["maxItems"]:
            raise ValidationError(f"{path}: at most {schema['maxItems']} items")
    elif t == "number":
        if not isinstance(instance, (int, float)) or isinstance(instance, bool):
            raise ValidationError(f"{path}: expected number")
    elif t == "integer":
        if not isinstance(instance, int) or isinstance(instance, bool):
            raise ValidationError(f"{path}: expected integer")
    elif t == "string":
        if not isinstance(instance, str):
            raise ValidationError(f"{path}: expected string")
    elif t == "boolean":
        if not isinstance(instance, bool):
            raise ValidationError(f"{path}: expected boolean")
    if "enum" in schema and instance not in schema["enum"]:
        raise ValidationError(f"{path}: {instance!r} not one of {schema['enum']}")
    if "oneOf" in schema:
        errors = []
        for k, sub in enumerate(schema["oneOf"]):
            try:
                _check(instance, sub, f"{path}<{k}>")
                break
            except ValidationError as e:
                errors.append(str(e))
        else:
            raise ValidationError(f"{path}: no variant matched ({'; '.join(errors)})")


def validate(instance, schema_name):
    """Validate a config dict against a shipped schema; unknown keys rejected."""
    _check(instance, load_schema(schema_name), "$")
    return instance


@dataclass
class RunConfig:
    """Validated per-command configuration (CLI flags override file values).

    Behaves as a read-only mapping over the merged config so commands can
    use item access for optional, command-specific parameters.
    """

    command: str
    data: dict = dc_field(default_factory=dict)

    @property
    def norm(self):
        return self.data.get("norm", {"kind": "isotropic"})

    @property
    def subdiv(self):
        return int(self.data.get("subdiv", 5))

    @property
    def seed(self):
        return int(self.data.get("seed", 42))

    @property
    def out(self):
        return self.data.get("out", ".")

    def __getitem__(self, key):
        return self.data[key]

    def __contains__(self, key):
        return key in self.data

    def get(self, key, default=None):
        return self.data.get(key, default)


# -- deterministic JSON ------------------------------------------------------------

def _fmt(x):
    if isinstance(x, bool) or x is None:
        return "true" if x is True else ("false" if x is False else "null")
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        inner = ",".join(f"{json.dumps(str(k))}:{_fmt(v)}" for k, v in x.items())
        return "{" + inner + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ",".join(_fmt(v) for v in x) + "]"
    try:
        import numpy as np

        if isinstance(x, np.integer):
            return str(int(x))
        if isinstance(x, np.floating):
            return _fmt(float(x))
        if isinstance(x, np.ndarray):
            return _fmt(x.tolist())
    except ImportError:
        pass
    raise TypeError(f"cannot serialize {type(x)}")


def dumps_17(obj) -> str:
    """JSON text with every float at 17 significant digits."""
    return _fmt(obj)


def write_json_atomic(path, obj):
    """Serialize to a temp file and rename: no partial outputs on failure."""
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(dumps_17(obj))
        fh.write("\n")
    os.replace(tmp, path)


def write_text_atomic(path, text):
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
