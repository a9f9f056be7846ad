"""Declarative experiment configs: YAML schema, validation, normalisation.

One config file describes one run: the model, what is swept, the ridge
policy, solver knobs and (for simulation modes) the finite-size block.
Validation rejects unknown keys and reports precise locations; defaults
are filled in and echoed so a run is fully described by its normalised
config.
"""

from __future__ import annotations

import copy
import json

import yaml
from jsonschema import Draft202012Validator

from .errors import ConfigError

MODES = ("theory", "simulate", "compare")
AXES = ("p_over_n", "n_over_d", "alpha", "lam")
RATIO_KEYS = ("alpha", "gamma", "p_over_n", "n_over_d")

_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["mode", "model"],
    "properties": {
        "mode": {"enum": list(MODES) + ["separability"]},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axis", "min", "max", "count"],
            "properties": {
                "axis": {"enum": list(AXES)},
                "min": _POS,
                "max": _POS,
                "count": {"type": "integer", "minimum": 1},
                "scale": {"enum": ["log", "linear"]},
                "include": {"type": "array", "items": _POS},
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["loss", "task", "channel"],
            "properties": {
                "loss": {"enum": ["square", "logistic"]},
                "task": {"enum": ["regression", "classification"]},
                "channel": {"enum": ["sign", "linear"]},
                "delta": {"type": "number", "minimum": 0},
                "sigma": {"enum": ["sign", "erf", "identity", "tanh"]},
                "kappas": {
                    "type": "array", "items": {"type": "number"},
                    "minItems": 3, "maxItems": 3,
                },
                "spectral": {"enum": ["marchenko_pastur", "orthogonal"]},
                "rho": _POS,
            },
        },
        "fixed": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _POS for k in RATIO_KEYS},
        },
        "lam": _POS,
        "lam_policy": {"enum": ["fixed", "optimal"]},
        "lam_grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "min": _POS,
                "max": _POS,
                "count": {"type": "integer", "minimum": 1},
                "refine": {"type": "boolean"},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "damping": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "tol": _POS,
                "max_iter": {"type": "integer", "minimum": 1},
                "quad_nodes": {"type": "integer", "minimum": 1},
                "label_nodes": {"type": "integer", "minimum": 1},
                "warm_start": {"type": "boolean"},
            },
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["d"],
            "properties": {
                "d": {"type": "integer", "minimum": 2},
                "n_seeds": {"type": "integer", "minimum": 1},
                "n_test": {"type": ["integer", "null"], "minimum": 1},
                "ensemble": {"enum": ["gaussian", "haar"]},
                "equivalent": {"type": "boolean"},
                "fit_tol": _POS,
                "fit_max_iter": {"type": "integer", "minimum": 1},
            },
        },
        "separability": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_over_d"],
            "properties": {
                "n_over_d": {"type": "array", "items": _POS, "minItems": 1},
                "kinds": {
                    "type": "array", "minItems": 1,
                    "items": {"enum": ["marchenko_pastur", "orthogonal"]},
                },
                "lam": _POS,
                "collapse": _POS,
                "alpha_lo": _POS,
                "alpha_hi": _POS,
                "rtol": _POS,
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
    },
}

DEFAULTS = {
    "sweep": {"scale": "log", "include": []},
    "model": {"delta": 0.0, "sigma": None, "kappas": None,
              "spectral": "marchenko_pastur", "rho": 1.0},
    "fixed": {},
    "lam_grid": {"min": 1e-6, "max": 1e2, "count": 25, "refine": True},
    "solver": {"damping": 0.5, "tol": 1e-8, "max_iter": 10000,
               "quad_nodes": 101, "label_nodes": 51, "warm_start": True},
    "simulation": {"n_seeds": 30, "n_test": None, "ensemble": "gaussian",
                   "equivalent": False, "fit_tol": 1e-4, "fit_max_iter": 10000},
    "separability": {"kinds": ["marchenko_pastur"], "lam": 1e-4, "collapse": 0.1,
                     "alpha_lo": 0.1, "alpha_hi": 50.0, "rtol": 1e-3},
    "seed": 0,
}

_validator = Draft202012Validator(SCHEMA)


def _schema_errors(raw) -> list[str]:
    msgs = []
    for err in sorted(_validator.iter_errors(raw), key=lambda e: e.json_path):
        msgs.append(f"{err.json_path}: {err.message}")
    return msgs


def _semantic_errors(cfg: dict) -> list[str]:
    errs = []
    mode = cfg["mode"]
    model = cfg["model"]
    if (model.get("sigma") is None) == (model.get("kappas") is None):
        errs.append("$.model: give exactly one of 'sigma' (by name) or 'kappas' (triple)")
    if model["loss"] == "logistic" and model["task"] == "regression":
        errs.append("$.model: logistic loss is a classification loss")
    lam = cfg.get("lam")
    policy = cfg.get("lam_policy", "fixed")
    if lam is not None and policy == "optimal":
        errs.append("$.lam: conflicts with lam_policy 'optimal' "
                    "(give a fixed value or the policy, not both)")
    if mode == "separability":
        if "separability" not in cfg:
            errs.append("$: separability mode needs a 'separability' section")
    else:
        if "sweep" not in cfg:
            errs.append("$: a 'sweep' section is required outside separability mode")
        lam_axis = "sweep" in cfg and cfg["sweep"]["axis"] == "lam"
        if lam_axis and (lam is not None or policy == "optimal"):
            errs.append("$.lam: conflicts with sweeping the lam axis")
        if not lam_axis and lam is None and policy == "fixed":
            errs.append("$: a fixed 'lam' value or lam_policy 'optimal' is required")
        if policy == "optimal" and mode == "simulate":
            errs.append("$.lam_policy: the optimal-lambda policy applies only to "
                        "theory/compare modes")
    if mode in ("simulate", "compare") and "simulation" not in cfg:
        errs.append("$: simulate/compare modes need a 'simulation' section")
    if "sweep" in cfg:
        sw = cfg["sweep"]
        if sw["min"] > sw["max"]:
            errs.append("$.sweep: min must not exceed max")
        if sw["count"] == 1 and sw["min"] != sw["max"]:
            errs.append("$.sweep: count 1 requires min == max")
        axis = sw["axis"]
        fixed = dict(cfg.get("fixed", {}))
        if axis in fixed:
            errs.append(f"$.fixed: swept axis {axis!r} may not also be fixed")
        probe = 1.0 if axis == "lam" else sw["min"]
        try:
            resolve_ratios(axis, probe, fixed)
        except ConfigError as exc:
            errs.append(f"$.fixed: {exc}")
    return errs


def resolve_ratios(axis: str, value: float, fixed: dict) -> tuple[float, float]:
    """(alpha, gamma) from the swept axis value plus the fixed ratios."""
    vals = dict(fixed)
    if axis != "lam":
        vals[axis] = value
    if ("alpha" in vals) and ("p_over_n" in vals):
        raise ConfigError("give only one of alpha, p_over_n")
    if ("gamma" in vals) and ("n_over_d" in vals):
        raise ConfigError("give only one of gamma, n_over_d")
    if "alpha" in vals:
        alpha = vals["alpha"]
    elif "p_over_n" in vals:
        alpha = 1.0 / vals["p_over_n"]
    else:
        raise ConfigError("alpha is underdetermined: fix alpha or p_over_n")
    if "gamma" in vals:
        gamma = vals["gamma"]
    elif "n_over_d" in vals:
        gamma = alpha / vals["n_over_d"]
    else:
        raise ConfigError("gamma is underdetermined: fix gamma or n_over_d")
    return float(alpha), float(gamma)


def normalize(raw: dict) -> dict:
    """Validate a parsed config and fill every default."""
    errs = _schema_errors(raw)
    if errs:
        raise ConfigError("invalid config:\n  " + "\n  ".join(errs))
    cfg = copy.deepcopy(raw)
    for section in ("sweep", "model", "solver", "simulation", "separability", "lam_grid"):
        if section in cfg or section in ("model", "solver", "lam_grid"):
            merged = dict(DEFAULTS.get(section, {}))
            merged.update(cfg.get(section, {}))
            cfg[section] = merged
    cfg.setdefault("lam", None)
    cfg.setdefault("lam_policy", "fixed")
    cfg.setdefault("fixed", {})
    cfg.setdefault("seed", DEFAULTS["seed"])
    errs = _semantic_errors(cfg)
    if errs:
        raise ConfigError("invalid config:\n  " + "\n  ".join(errs))
    return cfg


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return normalize(raw)


def echo(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True, default=str)
