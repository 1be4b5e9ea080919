"""Experiment configuration: TOML sections ``[model]``, ``[sampler]``, ``[experiment]``.

Only flat tables of scalars and homogeneous lists are allowed, so the
writer below can serialise any valid configuration and
``parse(dump(parse(text))) == parse(text)``.
"""

from __future__ import annotations

import hashlib
import json
import re
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENTS = ("gaps", "jlm", "kpoint", "discrepancy")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip())
        self.line = line


def _positive(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0


def _posint(x):
    return isinstance(x, int) and not isinstance(x, bool) and x > 0


def _nonneg_int(x):
    return isinstance(x, int) and not isinstance(x, bool) and x >= 0


def _list_of(check):
    return lambda x: isinstance(x, list) and len(x) > 0 and all(check(v) for v in x)


def _either(*checks):
    return lambda x: any(c(x) for c in checks)


# field -> (validator, description, default); default None means required
SCHEMA = {
    "model": {
        "d": (lambda x: x in (2, 3) and not isinstance(x, bool), "2 or 3", 2),
        "beta": (_positive, "a positive number", 2.0),
        "N": (_either(_posint, _list_of(_posint)), "a positive integer or list of them", None),
        "c": (_positive, "a positive quadratic coefficient", 0.5),
    },
    "sampler": {
        "sweeps": (_posint, "a positive integer", None),
        "burn_in": (_nonneg_int, "a nonnegative integer", 2000),
        "thin": (_posint, "a positive integer", 10),
        "chains": (_posint, "a positive integer", 4),
        "seed": (_nonneg_int, "a nonnegative integer", 0),
        "sigma": (_positive, "a positive number", None),
        "time_budget": (_positive, "a positive number of seconds", None),
    },
    "experiment": {
        "name": (lambda x: x in EXPERIMENTS, f"one of {', '.join(EXPERIMENTS)}", None),
        "k": (_posint, "a positive integer", 1),
        "R": (_either(_positive, _list_of(_positive)), "a positive number or list", 1.0),
        "Q": (_list_of(_posint), "a list of positive integers", [2, 3, 4, 5, 6]),
        "lam": (_posint, "an integer >= 100", 100),
        "C": (_positive, "a positive constant", 10.0),
        "probe_fraction": (lambda x: _positive(x) and x < 1, "a number in (0, 1)", 0.6),
        "r_min": (_positive, "a positive number", 0.01),
        "r_max": (_positive, "a positive number", 2.0),
        "bins": (_posint, "a positive integer", 40),
        "fit_lo": (_positive, "a positive number", 0.05),
        "fit_hi": (_positive, "a positive number", 0.3),
        "grid_step": (_positive, "a positive number", 1.0),
    },
}

OPTIONAL_NO_DEFAULT = {("sampler", "sigma"), ("sampler", "time_budget")}
FLOAT_FIELDS = {("model", "beta"), ("model", "c"), ("sampler", "sigma"),
                ("sampler", "time_budget")} | {
    ("experiment", k) for k in ("R", "C", "probe_fraction", "r_min", "r_max", "fit_lo",
                                "fit_hi", "grid_step")}


def _line_of(text, section, key):
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            continue
        if key is None and current == section:
            return n - 1
        if current == section and re.match(rf"^{re.escape(key)}\s*=", line):
            return n
    return None


def parse(text, path=None):
    """Parse and validate configuration text; returns a dict with defaults filled in."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", int(m.group(1)) if m else None, path) from None
    out = {}
    for section in raw:
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", _line_of(text, section, None), path)
        if not isinstance(raw[section], dict):
            raise ConfigError(f"[{section}] must be a table", None, path)
    for section, fields in SCHEMA.items():
        given = raw.get(section, {})
        for key in given:
            if key not in fields:
                raise ConfigError(f"[{section}] unknown field {key!r}",
                                  _line_of(text, section, key), path)
        values = {}
        for key, (check, desc, default) in fields.items():
            if key in given:
                v = given[key]
                if not check(v):
                    raise ConfigError(f"[{section}] {key}: expected {desc}, got {v!r}",
                                      _line_of(text, section, key), path)
                if (section, key) in FLOAT_FIELDS:
                    v = [float(x) for x in v] if isinstance(v, list) else float(v)
                values[key] = v
            elif default is not None:
                values[key] = default
            elif (section, key) not in OPTIONAL_NO_DEFAULT:
                raise ConfigError(f"[{section}] missing required field {key!r}", None, path)
        out[section] = values
    s = out["sampler"]
    if s["sweeps"] <= s["burn_in"]:
        raise ConfigError("[sampler] sweeps must exceed burn_in",
                          _line_of(text, "sampler", "sweeps"), path)
    e = out["experiment"]
    if e["lam"] < 100:
        raise ConfigError("[experiment] lam: expected an integer >= 100",
                          _line_of(text, "experiment", "lam"), path)
    if e["r_min"] >= e["r_max"]:
        raise ConfigError("[experiment] r_min must be below r_max",
                          _line_of(text, "experiment", "r_min"), path)
    return out


def load(path):
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), path=str(path))


def _scalar(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot serialise {v!r}")


def dump(config):
    """Serialise a parsed configuration back to TOML text."""
    lines = []
    for section in SCHEMA:
        if section not in config:
            continue
        lines.append(f"[{section}]")
        for key, v in config[section].items():
            if isinstance(v, list):
                text = "[" + ", ".join(_scalar(x) for x in v) + "]"
            else:
                text = _scalar(v)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)


def config_hash(config):
    """SHA-256 of the canonical JSON form of a parsed configuration."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
