"""Run configuration: JSON in, validated dict out."""

from __future__ import annotations

import copy
import hashlib
import json

import jsonschema

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "units": {"enum": ["J", "absolute"]},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["N", "U", "Delta"],
            "properties": {
                "N": {"type": "integer", "minimum": 0},
                "J": _pos,
                "U": _nonneg,
                "Delta": _num,
                "OmegaPrime": _nonneg,
                "max_atoms": {"type": "integer", "minimum": 1},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["omega_min", "omega_max", "omega_step"],
            "properties": {
                "omega_min": _nonneg,
                "omega_max": _nonneg,
                "omega_step": _pos,
                "omega_prime_ratio": _nonneg,
            },
        },
        "ramp": {
            "type": "object",
            "additionalProperties": False,
            "required": ["v"],
            "properties": {
                "v": _nonneg,
                "v_prime": _nonneg,
                "t_final": _pos,
                "dt": _pos,
                "sample_every": {"type": "integer", "minimum": 1},
                "adaptive_dt": {"type": "boolean"},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["auto", "dense", "lanczos"]},
                "dense_threshold": {"type": "integer", "minimum": 1},
                "tol": _pos,
                "krylov_tol": _pos,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "format": {"enum": ["csv", "json"]},
                "path": {"type": "string"},
                "precision": {"type": "integer", "minimum": 1, "maximum": 17},
            },
        },
        "three_level": {
            "type": "object",
            "additionalProperties": False,
            "required": ["Omega_g", "Omega_e", "Delta_r"],
            "properties": {
                "Omega_g": _num,
                "Omega_e": _num,
                "Delta_r": _num,
                "Delta_e": _num,
                "t_final": _pos,
                "dt": _pos,
                "threshold_factor": _pos,
            },
        },
        "trap": {
            "type": "object",
            "additionalProperties": False,
            "required": ["V_b_hz", "x0_um"],
            "properties": {
                "V_b_hz": _pos,
                "x0_um": _pos,
                "mass_kg": _pos,
                "U_hz": _nonneg,
                "N": {"type": "integer", "minimum": 0},
                "threshold": _pos,
            },
        },
        "batch": {"type": "array", "items": {"type": "object"}},
    },
}

DEFAULTS = {
    "solver": {"method": "auto", "dense_threshold": 2000, "tol": 1e-12,
               "krylov_tol": 1e-13},
    "output": {"format": "csv", "precision": 12},
}


class ConfigError(ValueError):
    pass


def _where(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def validate(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config error at {_where(exc.absolute_path)}: {exc.message}")
    units = cfg.get("units")
    if units is None and ("model" in cfg):
        raise ConfigError(
            "config error at units: energy units must be declared ('J' or 'absolute')"
        )
    if units == "J" and "model" in cfg and cfg["model"].get("J", 1.0) != 1.0:
        raise ConfigError(
            "config error at model.J: with units 'J' the tunnelling rate is the "
            "unit of energy and must equal 1 (use units 'absolute' otherwise)"
        )
    sw = cfg.get("sweep")
    if sw and sw["omega_max"] < sw["omega_min"]:
        raise ConfigError("config error at sweep.omega_max: smaller than omega_min")
    out = copy.deepcopy(cfg)
    for block, values in DEFAULTS.items():
        out[block] = {**values, **out.get(block, {})}
    return out


def loads(text: str) -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config is not valid JSON: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        )
    if not isinstance(cfg, dict):
        raise ConfigError("config error at <root>: expected a JSON object")
    return validate(cfg)


def load(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return loads(text)


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def require(cfg: dict, *blocks: str):
    for b in blocks:
        if b not in cfg:
            raise ConfigError(f"config error at {b}: block is required for this command")
