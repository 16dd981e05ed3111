"""Experiment configuration: YAML files, defaults, overrides and validation."""

from __future__ import annotations

import copy
import hashlib
import json
import re
from pathlib import Path

import yaml

SCHEMA_VERSION = 1


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-8`` (no decimal point) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"""),
    list("-+0123456789"))


def _load_yaml(text):
    return yaml.load(text, Loader=_Loader)


class ConfigError(ValueError):
    """Configuration could not be parsed or failed validation."""


DEFAULTS = {
    "version": SCHEMA_VERSION,
    "seed": 0,
    "output": "results",
    "s": 0.75,
    "kernel": {
        "orders": [0.55, 0.75, 0.95],
        "modes_1d": 256,
        "modes_2d": 64,
        "tol": 1e-8,
    },
    "poisson": {
        "coarse": 32,
        "fine": 64,
        "min_ratio": 4.0,
    },
    "ibp": {
        "modes": 64,
        "tol": 1e-6,
    },
    "born": {
        "modes": 32,
        "potential": {"family": "bump", "amplitude": 1.5, "center": [1.5, 1.6], "rate": 4.0},
        "terms": 20,
        "tol": 1e-9,
        "max_contraction": 0.5,
    },
    "frechet": {
        "modes": 32,
        "potential": {"family": "bump", "amplitude": 1.0, "center": [1.5, 1.6], "rate": 4.0},
        "scales": [1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
        "slope": 2.0,
        "slope_tol": 0.1,
    },
    "alessandrini": {
        "modes": 64,
        "coarse": 32,
        "potential": {"family": "smooth-bump", "amplitude": 1.0, "center": [1.4, 1.7],
                      "radius": 1.2},
        "frequencies": [[0, 0], [1, 0], [2, 0], [1, 1], [2, 2], [4, 0], [0, -4], [3, -2],
                        [2.8, 2.8]],
        "tol": 1e-3,
        "min_ratio": 4.0,
    },
    "reconstruct": {
        "rho": 8.0,
        "band_limited": {"modes": 64, "pad": 0.0, "tol": 1e-3,
                         "potential": {"family": "band-limited"}},
        "bump": {"modes": 32, "pad": None, "tol": 0.05,
                 "potential": {"family": "smooth-bump", "amplitude": 1.0,
                               "center": [1.5707963267948966, 1.5707963267948966],
                               "radius": 1.5}},
    },
    "stability": {
        "modes": 24,
        "base": {"family": "bump", "amplitude": 1.0, "center": [1.5, 1.6], "rate": 4.0},
        "perturbation": {"family": "separable-sine", "amplitude": 1.0, "modes": [2, 3]},
        "scales": [1e-4, 1e-3, 1e-2, 3e-2, 1e-1, 3e-1],
        "weightings": ["h12", "l2"],
    },
    "cgo": {
        "lower": [-3.0, -3.0, -1.5],
        "upper": [3.0, 3.0, 1.5],
        "shape": [321, 321, 17],
        "order": 2,
        "h": [0.4, 0.2, 0.1],
        "lam": 1.0,
        "slope": 1.0,
        "slope_tol": 0.1,
        "mismatch_tol": 1e-3,
        "biharmonic_signs": [1, -1],
    },
    "gauge": {
        "nodes": 201,
        "samples": 20,
        "degree": 4,
        "tol": 1e-5,
    },
    "psi": {
        "nodes": 301,
        "half_width": 2.0,
        "psi_center": [0.2, 1.0],
        "w_center": [-0.3, -0.9],
        "radius": 0.7,
        "tol": 1e-4,
    },
    "stationary_phase": {
        "h": [0.2, 0.1, 0.05, 0.02],
        "orders": [1, 2, 3],
        "matrices": [[[1.0, 0.0], [0.0, 1.0]], [[0.0, 4.0], [4.0, 0.0]]],
        "width": 0.5,
        "half_width": 4.0,
        "nodes": 257,
        "slack": 2.0,
    },
    "trace_relations": {
        "nodes": 201,
        "tol": 1e-8,
    },
}


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(base[key], dict) and "family" in base[key]:
            # potential specs take free-form keys; a new family starts afresh
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            same = val.get("family", base[key]["family"]) == base[key]["family"]
            out[key] = {**base[key], **val} if same else copy.deepcopy(val)
        elif isinstance(base[key], dict) and base[key]:
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def parse_override(text):
    """``a.b.c=value`` with ``value`` parsed as YAML."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        val = _load_yaml(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from None
    nested = val
    for part in reversed(key.strip().split(".")):
        nested = {part: nested}
    return nested


def load_config(path=None, overrides=(), seed=None, output=None):
    """Defaults, updated by the YAML file, then ``key=value`` overrides, then validated."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"configuration file {path} does not exist")
        try:
            data = _load_yaml(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("the configuration must be a mapping")
        cfg = _merge(cfg, data)
    for text in overrides:
        cfg = _merge(cfg, parse_override(text))
    if seed is not None:
        cfg["seed"] = int(seed)
    if output is not None:
        cfg["output"] = str(output)
    validate(cfg)
    return cfg


def _positive(value, name):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise ConfigError(f"{name} must be a positive number, got {value!r}")


def _positive_list(values, name):
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{name} must be a non-empty list")
    for v in values:
        _positive(v, name)


def _check_potential(spec, name):
    families = ("bump", "smooth-bump", "separable-sine", "band-limited", "file")
    if not isinstance(spec, dict) or spec.get("family") not in families:
        raise ConfigError(f"{name}.family must be one of {', '.join(families)}")
    if spec["family"] == "file":
        if not Path(str(spec.get("path", ""))).is_file():
            raise ConfigError(f"{name}.path does not name an existing file")


def _check_types(cfg, ref, path=""):
    """Every entry whose default is a number must be a number (``None`` defaults are free)."""
    for key, default in ref.items():
        val = cfg[key]
        where = f"{path}{key}"
        if isinstance(default, dict) and "family" not in default:
            _check_types(val, default, where + ".")
        elif isinstance(default, bool):
            if not isinstance(val, bool):
                raise ConfigError(f"{where} must be true or false")
        elif isinstance(default, (int, float)):
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{where} must be a number, got {val!r}")
        elif isinstance(default, list) and not isinstance(val, list):
            raise ConfigError(f"{where} must be a list")


def validate(cfg):
    _check_types(cfg, DEFAULTS)
    if cfg.get("version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported configuration version {cfg.get('version')!r}")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    s = cfg["s"]
    if not isinstance(s, (int, float)) or not 0.5 < s < 1.0:
        raise ConfigError(f"s must lie in (1/2, 1), got {s!r}")
    for order in cfg["kernel"]["orders"]:
        if not 0.0 < order <= 1.0:
            raise ConfigError(f"kernel orders must lie in (0, 1], got {order!r}")
    for key in ("modes_1d", "modes_2d"):
        _positive(cfg["kernel"][key], f"kernel.{key}")
    if not cfg["poisson"]["coarse"] < cfg["poisson"]["fine"]:
        raise ConfigError("poisson.coarse must be smaller than poisson.fine")
    for section in ("born", "frechet", "alessandrini"):
        _positive(cfg[section]["modes"], f"{section}.modes")
        _check_potential(cfg[section]["potential"], f"{section}.potential")
    _positive(cfg["born"]["terms"], "born.terms")
    _positive_list(cfg["frechet"]["scales"], "frechet.scales")
    _positive(cfg["reconstruct"]["rho"], "reconstruct.rho")
    for key in ("band_limited", "bump"):
        _check_potential(cfg["reconstruct"][key]["potential"], f"reconstruct.{key}.potential")
    _check_potential(cfg["stability"]["base"], "stability.base")
    _check_potential(cfg["stability"]["perturbation"], "stability.perturbation")
    _positive_list(cfg["stability"]["scales"], "stability.scales")
    for wname in cfg["stability"]["weightings"]:
        if wname not in ("h12", "l2"):
            raise ConfigError(f"unknown weighting {wname!r}")
    c = cfg["cgo"]
    if not len(c["lower"]) == len(c["upper"]) == len(c["shape"]) == 3:
        raise ConfigError("cgo grid must be three-dimensional")
    if c["order"] < 2:
        raise ConfigError("cgo.order must be at least 2")
    _positive_list(c["h"], "cgo.h")
    _positive_list(cfg["stationary_phase"]["h"], "stationary_phase.h")
    for order in cfg["stationary_phase"]["orders"]:
        if not isinstance(order, int) or order < 1:
            raise ConfigError("stationary_phase.orders must be positive integers")
    return cfg


def config_hash(cfg):
    """SHA-256 of the canonical JSON form of the configuration (output location excluded)."""
    body = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
