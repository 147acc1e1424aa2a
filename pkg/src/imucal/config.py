"""Run configuration and its flat ``key = value`` file format.

Grammar: one assignment per line, ``#`` starts a comment, keys are either
top-level (``accel_source``, ``ec_window``) or dotted into a section
(``detector.k_max``, ``solver.max_iterations``).  Values are numbers or bare
or quoted strings.  Example::

    detector.k_max = 225
    detector.init_phase_duration = 40
    solver.integration_method = "rk4"
    accel_source = primary
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

from .ec_codec import DEFAULT_WINDOW, check_window
from .solver import SolverConfig
from .static_detector import DetectorConfig

CONFIG_ENV = "IMUCAL_CONFIG"


@dataclass
class RunConfig:
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    accel_source: str = "primary"
    ec_window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if self.accel_source not in ("primary", "secondary"):
            raise ValueError("accel_source must be 'primary' or 'secondary'")
        check_window(self.ec_window)


def _parse_value(text: str):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _coerce(default, value, key):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError(f"{key}: expected true/false")
        return value
    if isinstance(default, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ValueError(f"{key}: expected an integer")
        return value
    if isinstance(default, float):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValueError(f"{key}: expected a number")
        return float(value)
    return str(value)


def parse_config(text: str) -> RunConfig:
    sections = {"detector": {}, "solver": {}}
    top = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key = key.strip()
        value = _parse_value(value)
        if "." in key:
            section, _, name = key.partition(".")
            if section not in sections:
                raise ValueError(f"config line {lineno}: unknown section {section!r}")
            sections[section][name] = value
        else:
            top[key] = value

    built = {}
    for section, cls in (("detector", DetectorConfig), ("solver", SolverConfig)):
        defaults = cls()
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for name, value in sections[section].items():
            if name not in names:
                raise ValueError(f"unknown config key {section}.{name}")
            kwargs[name] = _coerce(getattr(defaults, name), value, f"{section}.{name}")
        built[section] = cls(**kwargs)

    base = RunConfig()
    unknown = set(top) - {"accel_source", "ec_window"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(
        built["detector"],
        built["solver"],
        _coerce(base.accel_source, top.get("accel_source", base.accel_source), "accel_source"),
        _coerce(base.ec_window, top.get("ec_window", base.ec_window), "ec_window"),
    )


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Read ``path``, else the file named by ``$IMUCAL_CONFIG``, else defaults."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return RunConfig()
    return parse_config(Path(path).read_text())
