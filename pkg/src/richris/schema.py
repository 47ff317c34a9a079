"""JSON schema for scenario files."""
import jsonschema

from richris.scenario import ScenarioError

_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_props = {
    "type": "object",
    "required": ["f0", "chi", "gamma"],
    "properties": {
        "f0": {"type": "number", "exclusiveMinimum": 0},
        "chi": {"type": "number", "exclusiveMinimum": 0},
        "gamma": {"type": "number", "minimum": 0},
    },
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "richris scenario",
    "type": "object",
    "required": ["room", "ris", "trajectory", "transceivers", "perturber_defaults"],
    "properties": {
        "room": {
            "type": "object",
            "required": ["boundary", "fence_spacing", "wall"],
            "properties": {
                "boundary": {"type": "array", "items": _point, "minItems": 3},
                "fence_spacing": {"type": "number", "exclusiveMinimum": 0},
                "wall": _props,
            },
        },
        "ris": {
            "type": "object",
            "required": ["segments", "on", "off"],
            "properties": {
                "segments": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["start", "direction", "pixels"],
                        "properties": {
                            "start": _point,
                            "direction": _point,
                            "pixels": {"type": "integer", "minimum": 1},
                        },
                    },
                },
                "element_spacing": {"type": "number", "exclusiveMinimum": 0},
                "elements_per_pixel": {"type": "integer", "minimum": 1},
                "on": _props,
                "off": _props,
            },
        },
        "trajectory": {
            "type": "object",
            "required": ["vertices"],
            "properties": {"vertices": {"type": "array", "items": _point, "minItems": 2}},
        },
        "transceivers": {
            "type": "object",
            "required": ["bs", "ue", "aux", "props"],
            "properties": {
                "bs": _point,
                "ue": _point,
                "aux": {"type": "array", "items": _point},
                "props": _props,
            },
        },
        "perturber_defaults": {
            "type": "object",
            "required": ["props"],
            "properties": {
                "p": {"type": "number", "minimum": 0, "maximum": 1},
                "shape": {"enum": ["cross", "circle", "square"]},
                "props": _props,
                "spacing": {"type": "number", "exclusiveMinimum": 0},
                "cross_length": {"type": "number", "exclusiveMinimum": 0},
                "circle_radius": {"type": "number", "exclusiveMinimum": 0},
                "square_side": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "physics_constants": {
            "type": "object",
            "properties": {
                "frequency": {"type": "number", "exclusiveMinimum": 0},
                "condition_limit": {"type": "number", "exclusiveMinimum": 1},
            },
        },
    },
}


class SchemaError(ScenarioError):
    def __init__(self, message, path):
        super().__init__(message)
        self.path = path


def field_path(parts):
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def validate_document(doc):
    """Raise :class:`SchemaError` naming the first offending field."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = field_path(err.absolute_path)
        raise SchemaError(f"{path}: {err.message}", path)
