"""Flat ``key = value`` run configuration files.

Grammar: one assignment per line, ``#`` starts a comment, blank lines are
ignored, values are numbers (``2e-12``) or, for a few keys, words. Every key
must be known; unknown or repeated keys are errors.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .circuit import DEFAULT_NMAX_MARGIN, DeviceConfig


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


DEVICE_KEYS = {f.name for f in dataclasses.fields(DeviceConfig)}
REQUIRED_KEYS = ("C", "I0", "beta", "Gamma10", "Gamma22")

RUN_DEFAULTS = {
    "n_fock": 6,
    "t_start": 0.0,
    "t_stop": None,          # None: a few optimal times
    "t_points": 201,
    "t_spacing": "linear",
    "margin": DEFAULT_NMAX_MARGIN,
    "mleq_factor": 10.0,
    "scale": 1.0,
    "tunneling": "auto",
    "out_dir": None,         # None: print to stdout
}
WORD_KEYS = {"t_spacing": ("linear", "log"), "tunneling": ("auto", "wkb", "config")}
INT_KEYS = {"n_fock", "t_points"}


@dataclass
class RunConfig:
    device: DeviceConfig
    n_fock: int = 6
    t_start: float = 0.0
    t_stop: float | None = None
    t_points: int = 201
    t_spacing: str = "linear"
    margin: float = DEFAULT_NMAX_MARGIN
    mleq_factor: float = 10.0
    scale: float = 1.0
    tunneling: str = "auto"
    out_dir: str | None = None
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_fock < 3:
            raise ConfigError(f"n_fock must be at least 3, got {self.n_fock}")
        if self.t_points < 2:
            raise ConfigError(f"t_points must be at least 2, got {self.t_points}")
        if self.t_start < 0:
            raise ConfigError("t_start must be non-negative")
        if self.t_stop is not None and self.t_stop <= self.t_start:
            raise ConfigError("t_stop must exceed t_start")
        if self.t_spacing == "log" and self.t_start <= 0:
            raise ConfigError("log spacing needs t_start > 0")
        for name in ("margin", "mleq_factor", "scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    def time_grid(self, t_stop_default: float) -> np.ndarray:
        stop = self.t_stop if self.t_stop is not None else t_stop_default
        if stop <= self.t_start:
            raise ConfigError("time grid stop must exceed its start")
        if self.t_spacing == "log":
            return np.geomspace(self.t_start, stop, self.t_points)
        return np.linspace(self.t_start, stop, self.t_points)

    def replace_device(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, device=dataclasses.replace(self.device, **changes))


def _parse_value(key: str, raw: str, lineno: int):
    if key in WORD_KEYS:
        if raw not in WORD_KEYS[key]:
            raise ConfigError(f"line {lineno}: {key} must be one of {', '.join(WORD_KEYS[key])}")
        return raw
    if key == "out_dir":
        return raw
    if raw.lower() == "none":
        return None
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot read a number from {raw!r} for {key}") from None
    if not math.isfinite(value):
        raise ConfigError(f"line {lineno}: {key} must be finite")
    if key in INT_KEYS:
        if value != int(value):
            raise ConfigError(f"line {lineno}: {key} must be an integer")
        return int(value)
    return value


def parse_text(text: str, source: str | None = None) -> RunConfig:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if not key or not raw:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key not in DEVICE_KEYS and key not in RUN_DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: {key} given twice")
        values[key] = _parse_value(key, raw, lineno)

    missing = [k for k in REQUIRED_KEYS if values.get(k) is None]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    device_args = {k: v for k, v in values.items() if k in DEVICE_KEYS}
    run_args = {k: v for k, v in values.items() if k in RUN_DEFAULTS}
    try:
        device = DeviceConfig(**device_args)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(device=device, source=source, **{**RUN_DEFAULTS, **run_args})


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_text(path.read_text(encoding="utf-8"), source=str(path))


def bundled_config(name: str = "table1.cfg") -> RunConfig:
    """A configuration shipped with the package."""
    text = resources.files("jpmcount").joinpath("data", name).read_text(encoding="utf-8")
    return parse_text(text, source=name)


def bundled_config_path(name: str = "table1.cfg") -> Path:
    return Path(str(resources.files("jpmcount").joinpath("data", name)))
