"""
INI-style run configuration.

Sections and keys (all optional; unknown sections or keys are rejected):

    [model]     kind, epsilon, kappa_max
    [grids]     nx, nv, vmax
    [boundary]  alpha, beta (both walls), alpha_left, beta_left, alpha_right, beta_right, iota
    [potential] kind, amplitude, path
    [initial]   kind, amplitude, center, width, value
    [time]      T, cfl, dt
    [output]    record_every, snapshot_every
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .errors import ConfigError
from .transport import SimConfig

# (section, key) -> (SimConfig field, converter)
_KEYS: dict[tuple[str, str], tuple[str, type]] = {
    ("model", "kind"): ("kind", str),
    ("model", "epsilon"): ("epsilon", float),
    ("model", "kappa_max"): ("kappa_max", float),
    ("grids", "nx"): ("nx", int),
    ("grids", "nv"): ("nv", int),
    ("grids", "vmax"): ("vmax", float),
    ("boundary", "alpha_left"): ("alpha_left", float),
    ("boundary", "beta_left"): ("beta_left", float),
    ("boundary", "alpha_right"): ("alpha_right", float),
    ("boundary", "beta_right"): ("beta_right", float),
    ("boundary", "iota"): ("iota", float),
    ("potential", "kind"): ("potential", str),
    ("potential", "amplitude"): ("potential_amplitude", float),
    ("potential", "path"): ("potential_path", str),
    ("initial", "kind"): ("initial", str),
    ("initial", "amplitude"): ("initial_amplitude", float),
    ("initial", "center"): ("initial_center", float),
    ("initial", "width"): ("initial_width", float),
    ("initial", "value"): ("initial_value", float),
    ("time", "t"): ("T", float),
    ("time", "cfl"): ("cfl", float),
    ("time", "dt"): ("dt", float),
    ("output", "record_every"): ("record_every", int),
    ("output", "snapshot_every"): ("snapshot_every", int),
}
_BOTH_WALLS = {("boundary", "alpha"): ("alpha_left", "alpha_right"),
               ("boundary", "beta"): ("beta_left", "beta_right")}
SECTIONS = ("model", "grids", "boundary", "potential", "initial", "time", "output")


def _convert(raw: str, conv: type, path: str):
    try:
        if conv is int:
            x = float(raw)
            if x != int(x):
                raise ValueError
            return int(x)
        return conv(raw.strip())
    except ValueError:
        raise ConfigError(f"cannot read {raw!r} as {conv.__name__}", path) from None


def parse_config(text: str) -> SimConfig:
    """Parse configuration text into a fully resolved SimConfig."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc.message.splitlines()[0]}", "config") from None
    values: dict = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", section)
        for key, raw in cp.items(section):
            path = f"{section}.{key}"
            if (section, key) in _BOTH_WALLS:
                x = _convert(raw, float, path)
                for name in _BOTH_WALLS[(section, key)]:
                    values.setdefault(name, x)
                continue
            if (section, key) not in _KEYS:
                raise ConfigError("unknown key", path)
            name, conv = _KEYS[(section, key)]
            values[name] = _convert(raw, conv, path)
    return SimConfig(**values)


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "config") from None
    return parse_config(text)


def config_text(cfg: SimConfig) -> str:
    """Echo every resolved parameter in the input format (parse_config round-trips it)."""
    lines = []
    by_section: dict[str, list[str]] = {}
    for (section, key), (name, _) in _KEYS.items():
        value = getattr(cfg, name)
        if value is None:
            continue
        key = "T" if key == "t" else key
        by_section.setdefault(section, []).append(f"{key} = {value!r}" if isinstance(value, float)
                                                  else f"{key} = {value}")
    for section in SECTIONS:
        if section in by_section:
            lines.append(f"[{section}]")
            lines.extend(by_section[section])
            lines.append("")
    return "\n".join(lines)
