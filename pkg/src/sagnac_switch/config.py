"""Run configuration files (JSON).

Four optional sections, keys named exactly as the dataclass fields::

    {
      "switch":   {"v_pi": 4.0, "pulse_width": "32ns", "delay_length": 100.0, ...},
      "source":   {"heralded_pair_rate": 529.15, "trigger_rate": null},
      "detector": {"efficiency": 0.15, "dark_rate": 5757.4, "gate_width": "100ns"},
      "plan":     {"voltages": [0, 0.5, ...], "repetitions": 20, "integration_time": 10,
                   "seed": 1, "input_state": "H", "pulse_delay": 0}
    }

Units: volts, seconds, meters, dB, radians, counts/s. Time-valued keys also
accept strings with an ``s``, ``ms``, ``us`` or ``ns`` suffix. Missing keys
take the dataclass defaults; unknown sections or keys are rejected.
"""
from __future__ import annotations

import dataclasses
import json
import os
import re
from dataclasses import dataclass, field

from .engine import SwitchConfig
from .experiment import DEFAULT_SEED, DetectorModel, RunPlan, SourceModel

SEED_ENV = "SAGNAC_SEED"

TIME_KEYS = {"pulse_width", "short_arm_transit", "gate_width", "integration_time",
             "pulse_delay", "timing_jitter"}

_SI = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}
_TIME = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?\d+)?)\s*(s|ms|us|µs|ns)?\s*$")


class ConfigError(ValueError):
    pass


def parse_seconds(value) -> float:
    """``"32ns"`` -> 3.2e-08; bare numbers are seconds."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    m = _TIME.match(str(value))
    if not m:
        raise ConfigError(f"cannot read {value!r} as a time (use s, ms, us or ns)")
    return float(m.group(1)) * _SI[m.group(2) or "s"]


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw, 0)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None


@dataclass(frozen=True)
class RunConfig:
    switch: SwitchConfig = field(default_factory=SwitchConfig)
    source: SourceModel = field(default_factory=SourceModel)
    detector: DetectorModel = field(default_factory=DetectorModel)
    plan: RunPlan = field(default_factory=RunPlan)


SECTIONS = {"switch": SwitchConfig, "source": SourceModel, "detector": DetectorModel, "plan": RunPlan}


def _build(section: str, cls, values) -> object:
    if not isinstance(values, dict):
        raise ConfigError(f"section '{section}' must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(unknown)}")
    kwargs = {}
    for key, value in values.items():
        if key in TIME_KEYS and value is not None:
            value = parse_seconds(value)
        if key == "voltages":
            if not isinstance(value, list):
                raise ConfigError("plan.voltages must be a list of volts")
            value = tuple(value)
        kwargs[key] = value
    if cls is RunPlan and "seed" not in kwargs:
        kwargs["seed"] = default_seed()
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{section}' section: {exc}") from None


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    return RunConfig(**{name: _build(name, cls, data.get(name, {})) for name, cls in SECTIONS.items()})


def load_config(path=None) -> RunConfig:
    if path is None:
        return config_from_dict({})
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
