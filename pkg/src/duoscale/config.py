"""INI-style run configuration for the command-line interface.

Example::

    [system]
    n = 1
    mass = 1
    stiffness = 0.5        # fixed-fixed 1-DOF chain: K = 2 * 0.5 = 1
    c = 1
    d = 1
    epsilon = 0.01
    p = 1
    lambda = 0.5
    forcing = 1
    omega_tilde = 1.0143379

    [integrator]
    method = theta
    dt = 0.01
    t_end = 1256.6370614359173

    [initial]
    u0 = 0.019796915
    v0 = 0
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .integrate import IntegratorConfig

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


SYSTEM_KEYS = {
    "n": ("int", None), "mass": ("float", 1.0), "stiffness": ("float", None),
    "c": ("float", 0.0), "d": ("float", 0.0), "epsilon": ("float", None),
    "p": ("int", 1), "lambda": ("float", 0.0), "forcing": ("vector", None),
    "sigma": ("float", None), "omega_tilde": ("float", None), "driven_mode": ("int", 1),
}
INTEGRATOR_KEYS = {
    "method": ("str", "theta"), "theta": ("float", 0.5), "dt": ("float", 0.01),
    "t_end": ("float", None), "newton_tol": ("float", 1e-12),
    "newton_max_iter": ("int", 50), "stride": ("int", 1),
}
INITIAL_KEYS = {
    "u0": ("vector", None), "v0": ("vector", None), "a0": ("float", None),
    "beta0": ("float", 0.0), "zero_velocity": ("bool", False),
}
ANALYSIS_KEYS = {
    "sigma_min": ("float", None), "sigma_max": ("float", None), "n_sigma": ("int", 201),
    "epsilons": ("vector", None), "gamma": ("float", 1.0),
    "a_max": ("float", None), "n_a": ("int", 101),
    "lambda_min": ("float", 0.0), "lambda_max": ("float", None), "n_grid": ("int", 1001),
    "component": ("int", 1), "transient": ("float", 0.1), "input": ("str", None),
    "min_prominence": ("float", 10.0),
}
SECTIONS = {"system": SYSTEM_KEYS, "integrator": INTEGRATOR_KEYS,
            "initial": INITIAL_KEYS, "analysis": ANALYSIS_KEYS}


def _number(text: str, key: str) -> float:
    text = text.strip()
    if not _NUMBER.match(text):
        raise ConfigError(f"{key}: {text!r} is not a decimal number")
    value = float(text)
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite")
    return value


def _convert(kind: str, text: str, key: str):
    if kind == "float":
        return _number(text, key)
    if kind == "int":
        value = _number(text, key)
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {text!r}")
        return int(value)
    if kind == "vector":
        parts = [p for p in text.replace(";", ",").split(",")]
        if not parts or any(not p.strip() for p in parts):
            raise ConfigError(f"{key}: malformed list {text!r}")
        return tuple(_number(p, key) for p in parts)
    if kind == "bool":
        low = text.strip().lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    return text.strip()


def _section(parser, name, spec):
    raw = dict(parser.items(name)) if parser.has_section(name) else {}
    unknown = sorted(set(raw) - set(spec))
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {', '.join(unknown)}")
    out = {}
    for key, (kind, default) in spec.items():
        out[key] = _convert(kind, raw[key], f"{name}.{key}") if key in raw else default
    out["_given"] = frozenset(raw)
    return out


@dataclass
class RunConfig:
    system: dict
    integrator: dict
    initial: dict
    analysis: dict
    sections: frozenset = field(default_factory=frozenset)

    def integrator_config(self) -> IntegratorConfig:
        i = self.integrator
        if i["t_end"] is None:
            raise ConfigError("[integrator] t_end is required")
        if i["t_end"] <= 0 or i["dt"] <= 0:
            raise ConfigError("[integrator] dt and t_end must be > 0")
        if i["method"] not in ("theta", "rk4"):
            raise ConfigError(f"[integrator] unknown method {i['method']!r}")
        if not 0 <= i["theta"] <= 1 or i["stride"] < 1 or i["newton_max_iter"] < 1:
            raise ConfigError("[integrator] theta must lie in [0, 1]; stride, newton_max_iter >= 1")
        return IntegratorConfig(i["method"], i["theta"], i["dt"], i["t_end"],
                                i["newton_tol"], i["newton_max_iter"], i["stride"])

    def require(self, section: str, *keys: str):
        values = getattr(self, section)
        missing = [k for k in keys if values[k] is None]
        if missing:
            raise ConfigError(f"[{section}] missing required keys: {', '.join(missing)}")


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#",), comment_prefixes=("#",),
        interpolation=None, delimiters=("=",),
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from exc
    unknown = sorted(set(parser.sections()) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(unknown)}")
    parts = {name: _section(parser, name, spec) for name, spec in SECTIONS.items()}
    cfg = RunConfig(**parts, sections=frozenset(parser.sections()))
    _validate_system(cfg)
    _validate_initial(cfg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)


def _validate_system(cfg: RunConfig):
    s = cfg.system
    for key in ("n", "stiffness", "epsilon"):
        if s[key] is None:
            raise ConfigError(f"[system] missing required key: {key}")
    if s["n"] < 1 or s["mass"] <= 0 or s["stiffness"] <= 0 or s["epsilon"] <= 0:
        raise ConfigError("[system] n, mass, stiffness and epsilon must be positive")
    if not 1 <= s["p"] <= s["n"] or not 1 <= s["driven_mode"] <= s["n"]:
        raise ConfigError("[system] p and driven_mode must lie in 1..n")
    if s["lambda"] < 0:
        raise ConfigError("[system] lambda must be >= 0")
    forcing = s["forcing"]
    if forcing is not None and len(forcing) not in (1, s["n"]):
        raise ConfigError(f"[system] forcing must be a scalar or a list of {s['n']} values")
    forced = forcing is not None and any(x != 0 for x in forcing)
    both = s["sigma"] is not None and s["omega_tilde"] is not None
    if both:
        raise ConfigError("[system] give only one of sigma / omega_tilde")
    if forced and s["sigma"] is None and s["omega_tilde"] is None:
        raise ConfigError("[system] forcing requires sigma or omega_tilde")


def _validate_initial(cfg: RunConfig):
    i = cfg.initial
    n = cfg.system["n"]
    if i["a0"] is not None and (i["u0"] is not None or i["v0"] is not None):
        raise ConfigError("[initial] give either u0/v0 or a0/beta0, not both")
    for key in ("u0", "v0"):
        if i[key] is not None and len(i[key]) not in (1, n):
            raise ConfigError(f"[initial] {key} must have 1 or {n} entries")
        if i[key] is not None and len(i[key]) == 1 and n > 1 and i[key][0] != 0:
            raise ConfigError(f"[initial] scalar {key} is only allowed for n = 1 or zero")


def broadcast(values, n) -> np.ndarray:
    if values is None:
        return np.zeros(n)
    arr = np.asarray(values, dtype=float)
    return np.full(n, arr[0]) if arr.size == 1 else arr
