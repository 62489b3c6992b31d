"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
List-valued keys take comma-separated values.  Unknown keys, duplicate keys
and malformed values are rejected with the offending line number.
"""
from __future__ import annotations

import math
from pathlib import Path

from .errors import ConfigError

__all__ = ["KEYS", "parse_config", "load_config", "coerce", "resolve"]


def _float(text):
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _int(text):
    return int(text, 10)


def _floats(text):
    return tuple(_float(x) for x in text.split(",") if x.strip())


def _strs(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _str(text):
    return text.strip()


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default)
KEYS = {
    # global
    "seed": (_int, 0),
    "out_dir": (_str, "out"),
    "format": (_str, "csv"),
    "jobs": (_int, 1),
    "tol": (_float, None),
    # parameters; alpha/beta accept lists for sweeps
    "alpha": (_floats, (0.6,)),
    "beta": (_floats, (0.8,)),
    "s_list": (_floats, (0.0, 1.0)),
    "p_list": (_floats, (1.0, 2.0)),
    # torus runs
    "n1": (_int, 64),
    "n2": (_int, 64),
    "l1": (_float, 2 * math.pi),
    "l2": (_float, 2 * math.pi),
    "dt": (_float, 1e-2),
    "t_end": (_float, 1.0),
    "scheme": (_str, "IF_RK4"),
    "sample_count": (_int, 11),
    "amplitude": (_float, 1.0),
    "band_lo": (_float, 1.0),
    "band_hi": (_float, 6.0),
    "spectrum_slope": (_float, -2.0),
    "adaptive_cfl": (_bool, False),
    # linear quadrature
    "profile": (_str, "PLATEAU"),
    "R": (_float, 1.0),
    "sigma": (_float, 1.0),
    "R1": (_float, 1.0),
    "R2": (_float, 1.0),
    "r_inner": (_float, 0.0),
    "t_lo": (_float, 1e2),
    "t_hi": (_float, 1e4),
    "t_count": (_int, 17),
    "quad_rel_tol": (_float, 1e-8),
    # inequality lab
    "ids": (_strs, ("ANISO_INTERPOLATION", "DIRECTIONAL_INTERPOLATION", "SYMBOL_FACTS")),
    "samples": (_int, 1000),
    "n": (_int, 128),
    "rho_list": (_floats, (0.1, 1.0, 10.0)),
    # fit
    "series": (_str, ""),
    "column": (_str, ""),
    "theory": (_float, None),
}


def coerce(key: str, text: str, line: int | None = None):
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", line)
    parser, _ = KEYS[key]
    try:
        return parser(text.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}", line) from None


def parse_config(text: str) -> dict:
    """Parse config text into a dict holding only the keys that were set."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        out[key] = coerce(key, value, lineno)
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def resolve(settings: dict) -> dict:
    """Fill defaults for every key not set."""
    return {k: settings.get(k, default) for k, (_, default) in KEYS.items()}
