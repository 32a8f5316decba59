"""Experiment configuration: YAML file, schema-validated before any
computation; unknown keys are rejected."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import yaml

from .errors import ConfigError
from .model import DisorderSpec, LatticeSpec

_POSITIVE_INT = {"type": "integer", "minimum": 1}
_NUMBER = {"type": "number"}
_ENERGY = {"type": "number"}

_DISORDER_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["none", "uniform", "bernoulli"]},
        "strength": {"type": "number", "minimum": 0},
        "p": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

_MODEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lengths"],
    "properties": {
        "lengths": {"type": "array", "minItems": 1, "maxItems": 2,
                    "items": {"type": "integer", "minimum": 2}},
        "boundary": {"oneOf": [
            {"enum": ["open", "periodic"]},
            {"type": "array", "minItems": 1, "maxItems": 2,
             "items": {"enum": ["open", "periodic"]}},
        ]},
        "hopping": _NUMBER,
        "flux": _NUMBER,
        "disorder": _DISORDER_SCHEMA,
    },
}

_ENSEMBLE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_realizations": _POSITIVE_INT,
        "master_seed": {"type": "integer", "minimum": 0},
        "workers": _POSITIVE_INT,
    },
}

_LADDER_PROPS = {
    "eps0": {"type": "number", "exclusiveMinimum": 0},
    "rungs": _POSITIVE_INT,
    "ratio": {"type": "number", "exclusiveMinimum": 1},
}

EXPERIMENT_SCHEMAS = {
    "ccc_histogram": {"bins": _POSITIVE_INT},
    "diagonal_scan": {"energy": _ENERGY, "centered": {"type": "boolean"},
                      **_LADDER_PROPS},
    "box_scan": {"energy": _ENERGY, **_LADDER_PROPS},
    "dc_density": {"energy": _ENERGY, **_LADDER_PROPS},
    "ac_conductivity": {
        "temperature": {"type": "number", "minimum": 0},
        "fermi_energy": _ENERGY,
        "eps_reg": {"type": "number", "exclusiveMinimum": 0},
        "nu_max": {"type": "number", "exclusiveMinimum": 0},
        "nu_points": _POSITIVE_INT,
        "alpha": _POSITIVE_INT, "beta": _POSITIVE_INT,
    },
    "greens": {
        "fermi_energy": _ENERGY,
        "etas": {"type": "array", "minItems": 1,
                 "items": {"type": "number", "exclusiveMinimum": 0}},
        "alpha": _POSITIVE_INT, "beta": _POSITIVE_INT,
    },
    "liouvillian": {
        "fermi_energy": _ENERGY,
        "temperature": {"type": "number", "minimum": 0},
        "etas": {"type": "array", "minItems": 1,
                 "items": {"type": "number", "exclusiveMinimum": 0}},
        "nu": _NUMBER,
        "alpha": _POSITIVE_INT, "beta": _POSITIVE_INT,
    },
    "streda": {"fermi_energy": _ENERGY,
               "window": {"type": "number", "exclusiveMinimum": 0,
                          "maximum": 1}},
    "fermi_kernel": {"fermi_energy": _ENERGY},
    "linear_response": {
        "fermi_energy": _ENERGY,
        "field": _NUMBER,
        "t_max": {"type": "number", "exclusiveMinimum": 0},
        "n_times": _POSITIVE_INT,
    },
    "loclength": {
        "interval": {"type": "array", "minItems": 2, "maxItems": 2,
                     "items": _NUMBER},
        "t_ladder": {"type": "array", "minItems": 1,
                     "items": {"type": "number", "exclusiveMinimum": 0}},
    },
    "wegner": {"energy": _ENERGY,
               "widths": {"type": "array", "minItems": 2,
                          "items": {"type": "number", "exclusiveMinimum": 0}},
               "window": {"type": "number", "exclusiveMinimum": 0,
                          "maximum": 1}},
    "minami": {"energy": _ENERGY,
               "widths": {"type": "array", "minItems": 2,
                          "items": {"type": "number", "exclusiveMinimum": 0}}},
    "lifshitz": {"band": {"type": "array", "minItems": 2, "maxItems": 2,
                          "items": {"type": "number", "exclusiveMinimum": 0}}},
}

_TOP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": _MODEL_SCHEMA,
        "ensemble": _ENSEMBLE_SCHEMA,
        "experiments": {"type": "array",
                        "items": {"type": "object",
                                  "required": ["name"],
                                  "properties": {"name": {
                                      "enum": sorted(EXPERIMENT_SCHEMAS)}}}},
        "output": {"type": "string"},
        "cache": {"enum": ["off", "read", "read_write"]},
        "cache_dir": {"type": "string"},
    },
}


@dataclass
class ExperimentConfig:
    lattice: LatticeSpec
    disorder: DisorderSpec
    n_realizations: int = 1
    master_seed: int = 0
    workers: int = 1
    experiments: list[dict] = field(default_factory=list)
    output: str = "out"
    cache: str = "off"
    cache_dir: str | None = None
    raw: dict = field(default_factory=dict)


def _validate(raw: dict) -> None:
    try:
        jsonschema.validate(raw, _TOP_SCHEMA)
        for exp in raw.get("experiments", []):
            name = exp["name"]
            schema = {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {"name": {"const": name},
                               **EXPERIMENT_SCHEMAS[name]},
            }
            jsonschema.validate(exp, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from exc


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a loaded configuration mapping and build the typed config."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    if raw.get("cache") is False:
        # YAML reads a bare `off` as boolean false; accept it as the token
        raw = {**raw, "cache": "off"}
    _validate(raw)
    model = raw["model"]
    lengths = tuple(model["lengths"])
    boundary = model.get("boundary", "open")
    if isinstance(boundary, str):
        boundary = tuple(boundary for _ in lengths)
    else:
        boundary = tuple(boundary)
    try:
        lattice = LatticeSpec(lengths, boundary,
                              hopping=float(model.get("hopping", 1.0)),
                              flux=float(model.get("flux", 0.0)))
        dis_raw = model.get("disorder", {})
        ens_raw = raw.get("ensemble", {})
        disorder = DisorderSpec(
            kind=dis_raw.get("kind", "none"),
            strength=float(dis_raw.get("strength", 0.0)),
            p=float(dis_raw.get("p", 0.5)),
            master_seed=int(ens_raw.get("master_seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ens_raw = raw.get("ensemble", {})
    return ExperimentConfig(
        lattice=lattice,
        disorder=disorder,
        n_realizations=int(ens_raw.get("n_realizations", 1)),
        master_seed=int(ens_raw.get("master_seed", 0)),
        workers=int(ens_raw.get("workers", 1)),
        experiments=list(raw.get("experiments", [])),
        output=str(raw.get("output", "out")),
        cache=str(raw.get("cache", "off")),
        cache_dir=raw.get("cache_dir"),
        raw=raw,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return parse_config(raw)
