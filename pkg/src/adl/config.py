"""JSON run configuration: schema, validation and conversion to typed configs."""

import json
from dataclasses import fields
from pathlib import Path

import jsonschema

from .distillation import DistillConfig
from .training import TrainConfig


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}

_TRAIN_KEYS = {
    "epochs": _pos_int,
    "batch_size": _pos_int,
    "learning_rate": {"type": "number", "exclusiveMinimum": 0},
    "beta1": _num,
    "beta2": _num,
    "eps": _num,
    "l1": {"type": "number", "minimum": 0},
    "l0": {"type": "number", "minimum": 0},
    "k_active": _pos_int,
    "delta": {"type": "number", "minimum": 0},
    "overcomplete_factor": {"type": "number", "exclusiveMinimum": 0},
    "n_atoms": _pos_int,
    "bandwidth": {"type": "number", "exclusiveMinimum": 0},
    "theta_init": {"type": "number", "exclusiveMinimum": 0},
    "standardize": {"type": "boolean"},
}

_PLANTED = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n": _pos_int, "d": _pos_int, "c": _pos_int, "sparsity": _pos_int,
        "noise_std": {"type": "number", "minimum": 0}, "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["n", "d", "c", "sparsity"],
}

_VARIANT = {"enum": ["vanilla", "topk", "jump"]}
_DICT = {"enum": ["free", "archetypal"]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "input": {"oneOf": [
            {"type": "string"},
            {"type": "object", "additionalProperties": False,
             "properties": {"planted": _PLANTED}, "required": ["planted"]},
        ]},
        "out": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "variant": _VARIANT,
        "dictionary": _DICT,
        "archetypes": {"type": "string"},
        "model": {"type": "string"},
        "reference_model": {"type": "string"},
        "train": {"type": "object", "additionalProperties": False, "properties": _TRAIN_KEYS},
        "distill": {
            "type": "object", "additionalProperties": False,
            "properties": {"n_prime": _pos_int, "kmeans_iters": _pos_int},
        },
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2},
        "runs": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object", "additionalProperties": False,
                "properties": {"name": {"type": "string"}, "variant": _VARIANT,
                               "dictionary": _DICT, "delta": {"type": "number", "minimum": 0}},
                "required": ["name"],
            },
        },
        "bench": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "c": _pos_int, "d": _pos_int, "n": _pos_int,
                "objects_per_image": _pos_int, "sparsity": _pos_int,
                "noise_std": {"type": "number", "minimum": 0},
                "decorrelate": {"type": "boolean"},
                "dict_sizes": {"type": "array", "items": _pos_int, "minItems": 1},
                "methods": {"type": "array", "minItems": 1,
                            "items": {"enum": ["vanilla", "topk", "jump", "a-sae", "ra-sae",
                                               "seminmf", "convexnmf", "pca", "kmeans",
                                               "oracle"]}},
                "ra_delta": {"type": "number", "minimum": 0},
                "nmf_iters": _pos_int,
                "nmf_l1": {"type": "number", "minimum": 0},
            },
        },
    },
}


def validate(doc):
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None
    return doc


def load_config(path):
    """Parse and validate a run config; relative paths resolve against its folder."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    validate(doc)
    base = path.parent
    for key in ("input", "out", "archetypes", "model", "reference_model"):
        if isinstance(doc.get(key), str):
            p = Path(doc[key])
            doc[key] = str(p if p.is_absolute() else base / p)
    return doc


def train_config(doc, seed=None):
    kw = dict(doc.get("train", {}))
    kw["seed"] = int(seed if seed is not None else doc.get("seed", 0))
    known = {f.name for f in fields(TrainConfig)}
    return TrainConfig(**{k: v for k, v in kw.items() if k in known})


def distill_config(doc, seed=None):
    kw = dict(doc.get("distill", {}))
    kw["seed"] = int(seed if seed is not None else doc.get("seed", 0))
    return DistillConfig(**kw)
