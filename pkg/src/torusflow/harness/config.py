"""Run configuration: JSON schema, per-experiment defaults and merging."""

from __future__ import annotations

import copy
import json

import jsonschema

SCHEMA_VERSION = 1

EXPERIMENTS = ("evolve", "sweep", "theorem11", "lemma22", "oscillatory", "wkb", "diadic",
               "growth", "variation", "fuzz-appendix")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_posint = {"type": "integer", "minimum": 1}
_numlist = {"type": "array", "items": _pos, "minItems": 1}
_intlist = {"type": "array", "items": _posint, "minItems": 1}

POTENTIAL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["zero", "random_bounded", "decaying", "oscillatory", "constant_imag",
                          "scalar", "static", "file"]},
        "l_max": {"type": "integer", "minimum": 0},
        "bound": _pos,
        "complex": {"type": "boolean"},
        "gamma": _pos,
        "C": _pos,
        "lam": _pos,
        "start_T": {"type": "number", "minimum": 0},
        "c": _num,
        "amp": _num,
        "omega": _num,
        "h0": _pos,
        "ratio": _pos,
        "modes": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}},
        "path": {"type": "string"},
    },
}

SYMBOL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["static", "gaps", "decaying_laplacian"]},
        "poly_coeffs": {"type": "array", "items": _num, "minItems": 1},
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "threads": _posint,
        "out": {"type": "string"},
        "k": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "A": _pos,
                "M": {"type": "integer", "minimum": 8},
                "quadrature": {"enum": ["midpoint", "montecarlo"]},
                "value": _num,
            },
        },
        "potential": POTENTIAL_SCHEMA,
        "symbol": SYMBOL_SCHEMA,
        "initial": {"type": "string", "pattern": "^(constant|mode:-?[0-9]+)$"},
        "n_max": _posint,
        "tol": _pos,
        "T_list": _numlist,
        "alpha": _pos,
        "w_exp": _num,
        "observables": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
        "mu1": _posint,
        "mu2": _posint,
        "ensemble": _posint,
        "N_list": _intlist,
        "grid": _posint,
        "band_factor": _pos,
        "growth_factor": _pos,
        "gamma": _pos,
        "lambda_list": _numlist,
        "T_start_list": _numlist,
        "t_end": _pos,
        "ratio_band": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        "n_obs": _posint,
        "end_ratio": _pos,
        "j_min": {"type": "integer", "minimum": 0},
        "j_max": {"type": "integer", "minimum": 0, "maximum": 14},
        "p": _pos,
        "theta_max": _pos,
        "theta_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "beta_list": {"type": "array", "items": {"type": "number", "minimum": 1, "maximum": 2}, "minItems": 1},
        "N": _posint,
        "trials": _posint,
        "dim": _posint,
        "krein_trials": _posint,
        "lemma41_trials": _posint,
        "stability": _pos,
    },
}

_COMMON = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "threads": 1,
    "out": "runs",
    "k": {"A": 2.0, "M": 64, "quadrature": "midpoint", "value": 1.0},
}

DEFAULTS = {
    "evolve": {
        "potential": {"kind": "random_bounded", "l_max": 4, "bound": 1.0},
        "symbol": {"kind": "static", "poly_coeffs": [0.0, 1.0]},
        "initial": "constant", "n_max": 32, "tol": 1e-9, "T_list": [1, 2, 4],
        "alpha": 0.5, "mu1": 4, "mu2": 8,
    },
    "sweep": {
        "potential": {"kind": "random_bounded", "l_max": 4, "bound": 1.0},
        "symbol": {"kind": "static", "poly_coeffs": [0.0, 1.0]},
        "initial": "constant", "n_max": 32, "tol": 1e-8, "T_list": [1, 2, 4],
        "alpha": 0.5, "mu1": 4, "mu2": 8, "observables": ["l2", "halpha", "tail_mu1", "zero_dev"],
    },
    "theorem11": {
        "potential": {"kind": "random_bounded", "l_max": 4, "bound": 1.0},
        "symbol": {"kind": "static", "poly_coeffs": [0.0, 1.0]},
        "initial": "constant", "n_max": 64, "tol": 1e-8, "T_list": [1, 2, 4, 8],
        "alpha": 0.4, "w_exp": 0.5, "ensemble": 8, "growth_factor": 2.0,
    },
    "lemma22": {
        "potential": {"kind": "random_bounded", "l_max": 4, "bound": 1.0},
        "symbol": {"kind": "static", "poly_coeffs": [0.0, 1.0]},
        "N_list": [8, 16, 32, 64], "T_list": [1.0], "grid": 4096, "band_factor": 3.0,
    },
    "oscillatory": {
        "potential": {"kind": "oscillatory", "l_max": 4},
        "gamma": 0.9, "lambda_list": [0.05, 0.1], "T_start_list": [4.0, 8.0], "t_end": 256.0,
        "n_max": 32, "tol": 1e-9, "ratio_band": [2.8, 5.7], "k": {"M": 16},
    },
    "wkb": {
        "potential": {"kind": "decaying", "l_max": 8, "C": 1.0},
        "gamma": 0.96, "T_list": [64, 256, 1024], "n_max": 128, "tol": 1e-7, "n_obs": 16,
        "end_ratio": 0.7, "k": {"M": 32},
    },
    "diadic": {
        "potential": {"kind": "decaying", "l_max": 4},
        "gamma": 0.96, "lambda_list": [1.0, 0.5], "j_min": 2, "j_max": 6, "n_max": 64, "tol": 1e-7,
        "n_obs": 8, "k": {"M": 8},
    },
    "growth": {
        "potential": {"kind": "random_bounded", "l_max": 4, "bound": 1.0, "complex": True},
        "symbol": {"kind": "static", "poly_coeffs": [0.0, 1.0]},
        "initial": "constant", "n_max": 32, "tol": 1e-8, "T_list": [1, 2, 4, 8],
        "alpha": 0.5, "p": 1.8, "theta_max": 2.2, "theta_fraction": 0.9, "k": {"M": 32},
    },
    "variation": {
        "potential": {"kind": "random_bounded", "l_max": 4, "bound": 1.0, "complex": True},
        "symbol": {"kind": "static", "poly_coeffs": [0.0, 1.0]},
        "T_list": [4.0], "N": 16, "grid": 64, "alpha": 0.5, "p": 1.8, "beta_list": [1.0, 1.5, 2.0],
        "k": {"M": 8},
    },
    "fuzz-appendix": {
        "trials": 100_000, "dim": 16, "krein_trials": 10_000, "lemma41_trials": 100, "stability": 0.1,
    },
}


class ConfigError(ValueError):
    """Schema violation; ``key`` is the dotted path of the offending entry."""

    def __init__(self, msg, key):
        super().__init__(msg)
        self.key = key


def deep_merge(base, override):
    out = copy.deepcopy(base)
    for key, val in (override or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _error_key(err):
    path = list(err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path += extra[:1]
    elif err.validator == "required":
        path += [err.message.split("'")[1]]
    return ".".join(str(p) for p in path) or "<root>"


def validate(cfg):
    """Raise ConfigError naming the first failing key."""
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(cfg),
                    key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        err = errors[0]
        raise ConfigError(f"{_error_key(err)}: {err.message}", _error_key(err))


def resolve(user, overrides=None):
    """Validate the user config, fill in defaults, apply CLI overrides and validate again."""
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object", "<root>")
    validate(user)
    cfg = deep_merge(_COMMON, DEFAULTS[user["experiment"]])
    cfg = deep_merge(cfg, user)
    cfg = deep_merge(cfg, overrides)
    validate(cfg)
    return cfg


def load(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", "<root>") from exc
